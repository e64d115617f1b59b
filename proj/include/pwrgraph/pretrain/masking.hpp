#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "../nn/encoder.hpp"
#include "../segment/sample.hpp"
#include "../util/rng.hpp"

namespace pwrgraph
{

enum class MaskKind : std::uint8_t
{
  toggle,
  type
};

/*! \brief Sample with masked node features; the hidden values are kept as ground truth. */
struct MaskedSample
{
  SubModuleSample base;
  Eigen::MatrixXd input; ///< n x encoder_input_width, masked entries zeroed and indicators set
  std::vector<std::uint32_t> toggle_nodes;
  std::vector<std::uint8_t> toggle_truth;
  std::vector<std::uint32_t> type_nodes;
  std::vector<std::size_t> type_truth; ///< NodeType index
};

namespace detail
{
inline std::size_t mask_count( double ratio, std::size_t n )
{
  if ( !( ratio >= 0.0 && ratio <= 1.0 ) )
    throw argument_error( "mask ratio must lie in [0, 1]" );
  return std::min( n, static_cast<std::size_t>( std::ceil( ratio * static_cast<double>( n ) - 1e-9 ) ) );
}

inline void mask_nodes( MaskedSample& m, MaskKind kind, std::vector<std::uint32_t> nodes )
{
  std::sort( nodes.begin(), nodes.end() );
  for ( auto i : nodes )
  {
    auto const r = static_cast<Eigen::Index>( i );
    if ( kind == MaskKind::toggle )
    {
      m.toggle_truth.push_back( m.base.features( r, feature_toggle ) != 0.0 ? 1 : 0 );
      m.input( r, feature_toggle ) = 0.0;
      m.input( r, mask_toggle_channel ) = 1.0;
    }
    else
    {
      m.type_truth.push_back( static_cast<std::size_t>( m.base.graph->node_type[i] ) );
      m.input.block( r, 0, 1, node_type_count ).setZero();
      m.input( r, mask_type_channel ) = 1.0;
    }
  }
  ( kind == MaskKind::toggle ? m.toggle_nodes : m.type_nodes ) = std::move( nodes );
}
} // namespace detail

/*! \brief Mask ceil(ratio * n) nodes drawn uniformly without replacement. */
inline MaskedSample apply_mask( SubModuleSample const& s, MaskKind kind, double ratio, std::uint64_t seed )
{
  MaskedSample m;
  m.base = s;
  m.input = encoder_input( s.features );
  auto const n = static_cast<std::size_t>( s.features.rows() );
  auto const k = detail::mask_count( ratio, n );
  std::vector<std::uint32_t> idx( n );
  std::iota( idx.begin(), idx.end(), 0u );
  rng_t rng( seed );
  shuffle_in_place( idx, rng );
  idx.resize( k );
  detail::mask_nodes( m, kind, std::move( idx ) );
  return m;
}

/*! \brief Toggle and type masks on disjoint node sets (toggle nodes drawn first). */
inline MaskedSample apply_masks( SubModuleSample const& s, double toggle_ratio, double type_ratio, std::uint64_t seed )
{
  MaskedSample m;
  m.base = s;
  m.input = encoder_input( s.features );
  auto const n = static_cast<std::size_t>( s.features.rows() );
  auto const kt = detail::mask_count( toggle_ratio, n );
  auto const ky = std::min( n - kt, detail::mask_count( type_ratio, n ) );
  std::vector<std::uint32_t> idx( n );
  std::iota( idx.begin(), idx.end(), 0u );
  rng_t rng( seed );
  shuffle_in_place( idx, rng );
  detail::mask_nodes( m, MaskKind::toggle, { idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>( kt ) } );
  detail::mask_nodes( m, MaskKind::type, { idx.begin() + static_cast<std::ptrdiff_t>( kt ),
                                           idx.begin() + static_cast<std::ptrdiff_t>( kt + ky ) } );
  return m;
}

} // namespace pwrgraph
