#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "../util/rng.hpp"
#include "editor.hpp"

namespace pwrgraph
{

enum class RewriteKind : std::uint8_t
{
  de_morgan,
  double_inverter_insert,
  double_inverter_remove,
  reassociate,
  buffer_insert,
  buffer_remove
};

inline constexpr std::array<RewriteKind, 6> all_rewrites = {
    RewriteKind::de_morgan,   RewriteKind::double_inverter_insert, RewriteKind::double_inverter_remove,
    RewriteKind::reassociate, RewriteKind::buffer_insert,          RewriteKind::buffer_remove };

/*! \brief Function-preserving local rewrites on a NetlistEditor.
 *
 * Every rewrite keeps primary ports, register instance paths and register
 * output values unchanged. A rewrite that does not apply at the drawn site
 * returns false and the caller draws again.
 */
class Rewriter
{
public:
  /*! \param max_fanout when set, removals that would push a net above it are refused */
  Rewriter( NetlistEditor& ed, std::string stem, std::optional<std::size_t> max_fanout = std::nullopt )
      : ed_( ed ), lib_( ed.library() ), stem_( std::move( stem ) ), max_fanout_( max_fanout )
  {
    inv_ = lib_.find( CellFunction::inv, 1 );
    buf_ = lib_.find( CellFunction::buf, 1 );
  }

  /*! \brief Apply `k` rewrites drawn uniformly from `pool`; returns the count actually applied. */
  std::size_t run( std::size_t k, rng_t& rng, std::vector<RewriteKind> const& pool = { all_rewrites.begin(), all_rewrites.end() } )
  {
    std::size_t done = 0, attempts = 0;
    auto const budget = 400 * k + 100;
    while ( done < k && attempts++ < budget )
    {
      auto const n = ed_.netlist().cells.size();
      if ( n == 0 )
        break;
      auto const kind = pool[uniform_index( rng, pool.size() )];
      auto const site = static_cast<CellId>( uniform_index( rng, n ) );
      if ( !ed_.alive( site ) )
        continue;
      if ( apply( kind, site, rng ) )
      {
        ++done;
        ++applied_[static_cast<std::size_t>( kind )];
      }
    }
    return done;
  }

  bool apply( RewriteKind kind, CellId site, rng_t& rng )
  {
    switch ( kind )
    {
    case RewriteKind::de_morgan:
      return de_morgan( site );
    case RewriteKind::double_inverter_insert:
      return double_inverter_insert( site );
    case RewriteKind::double_inverter_remove:
      return double_inverter_remove( site );
    case RewriteKind::reassociate:
      return reassociate( site, rng );
    case RewriteKind::buffer_insert:
      return buffer_insert( site, rng );
    case RewriteKind::buffer_remove:
      return buffer_remove( site );
    }
    return false;
  }

  std::array<std::size_t, 6> const& applied() const { return applied_; }

  /*! \brief AND(x) = NOR(!x), NAND(x) = OR(!x) and their duals. */
  bool de_morgan( CellId id )
  {
    auto const& lc = ed_.lib_cell( id );
    CellFunction dual;
    switch ( lc.function )
    {
    case CellFunction::and_:
      dual = CellFunction::nor;
      break;
    case CellFunction::nor:
      dual = CellFunction::and_;
      break;
    case CellFunction::nand:
      dual = CellFunction::or_;
      break;
    case CellFunction::or_:
      dual = CellFunction::nand;
      break;
    default:
      return false;
    }
    auto const* target = lib_.find( dual, lc.inputs.size() );
    if ( !target || !inv_ )
      return false;
    auto const module = std::string( module_of( ed_.cell( id ).instance_path ) );
    auto inputs = ed_.cell( id ).input_nets;
    for ( auto& n : inputs )
    {
      auto const m = ed_.add_net_in( module, stem_ + "_n" );
      ed_.add_cell( module, stem_, inv_->name, { n }, m );
      n = m;
    }
    auto& c = ed_.cell( id );
    c.input_nets = std::move( inputs );
    c.lib_cell = target->name;
    return true;
  }

  /*! \brief cell -> INV -> INV -> original output net. */
  bool double_inverter_insert( CellId id )
  {
    if ( !inv_ || group_of( ed_.lib_cell( id ).node_type ) != PowerGroup::combinational )
      return false;
    auto const module = std::string( module_of( ed_.cell( id ).instance_path ) );
    auto const out = ed_.cell( id ).output_net;
    auto const m1 = ed_.add_net_in( module, stem_ + "_n" );
    auto const m2 = ed_.add_net_in( module, stem_ + "_n" );
    ed_.cell( id ).output_net = m1;
    ed_.add_cell( module, stem_, inv_->name, { m1 }, m2 );
    ed_.add_cell( module, stem_, inv_->name, { m2 }, out );
    return true;
  }

  /*! \brief a -> INV -> INV(id) -> n  becomes  a -> (sinks of n). */
  bool double_inverter_remove( CellId id )
  {
    if ( ed_.lib_cell( id ).function != CellFunction::inv )
      return false;
    auto const conn = ed_.connectivity();
    auto const mid = ed_.cell( id ).input_nets[0];
    auto const first = conn.driver[mid];
    if ( !first || ed_.lib_cell( *first ).function != CellFunction::inv )
      return false;
    auto const src = ed_.cell( *first ).input_nets[0];
    auto const out = ed_.cell( id ).output_net;
    if ( !bypass( conn, out, src, conn.fanout( mid ) == 1 ? 1 : 0 ) )
      return false;
    ed_.remove_cell( id );
    ed_.remove_net( out );
    if ( conn.fanout( mid ) == 1 && !ed_.is_primary_output( mid ) )
    {
      ed_.remove_cell( *first );
      ed_.remove_net( mid );
    }
    return true;
  }

  /*! \brief f(f(a, b), y) -> f(a, f(b, y)) for 2-input AND/OR/XOR inside one module. */
  bool reassociate( CellId outer, rng_t& rng )
  {
    auto const& lo = ed_.lib_cell( outer );
    if ( lo.inputs.size() != 2 ||
         ( lo.function != CellFunction::and_ && lo.function != CellFunction::or_ && lo.function != CellFunction::xor_ ) )
      return false;
    auto const conn = ed_.connectivity();
    auto const pick = uniform_index( rng, 2 );
    for ( std::size_t t = 0; t < 2; ++t )
    {
      auto const xi = ( pick + t ) % 2;
      auto const x = ed_.cell( outer ).input_nets[xi];
      auto const y = ed_.cell( outer ).input_nets[1 - xi];
      auto const inner = conn.driver[x];
      if ( !inner || *inner == outer || conn.fanout( x ) != 1 || ed_.is_primary_output( x ) )
        continue;
      auto const& li = ed_.lib_cell( *inner );
      if ( li.function != lo.function || li.inputs.size() != 2 ||
           module_of( ed_.cell( *inner ).instance_path ) != module_of( ed_.cell( outer ).instance_path ) )
        continue;
      auto const a = ed_.cell( *inner ).input_nets[0];
      auto const b = ed_.cell( *inner ).input_nets[1];
      ed_.cell( *inner ).input_nets = { b, y };
      ed_.cell( outer ).input_nets = { a, x };
      return true;
    }
    return false;
  }

  /*! \brief Insert a BUF in front of one data pin of `id`. */
  bool buffer_insert( CellId id, rng_t& rng )
  {
    auto& c = ed_.cell( id );
    if ( !buf_ || c.input_nets.empty() )
      return false;
    auto const pin = uniform_index( rng, c.input_nets.size() );
    auto const module = std::string( module_of( c.instance_path ) );
    auto const src = c.input_nets[pin];
    auto const m = ed_.add_net_in( module, stem_ + "_n" );
    ed_.cell( id ).input_nets[pin] = m;
    ed_.add_cell( module, stem_, buf_->name, { src }, m );
    return true;
  }

  /*! \brief a -> BUF(id) -> n  becomes  a -> (sinks of n). */
  bool buffer_remove( CellId id )
  {
    if ( ed_.lib_cell( id ).function != CellFunction::buf )
      return false;
    auto const conn = ed_.connectivity();
    auto const src = ed_.cell( id ).input_nets[0];
    auto const out = ed_.cell( id ).output_net;
    if ( !bypass( conn, out, src, 1 ) )
      return false;
    ed_.remove_cell( id );
    ed_.remove_net( out );
    return true;
  }

private:
  /*! \brief Reconnect every sink of `out` to `src`; `freed` pins of `src` disappear with the bypass. */
  bool bypass( Connectivity const& conn, NetId out, NetId src, std::size_t freed )
  {
    if ( out == src || ed_.is_primary_output( out ) || ed_.is_primary_input( out ) )
      return false;
    auto const& nl = ed_.netlist();
    auto const owner = nl.net_owner( src );
    for ( auto const& s : conn.sinks[out] )
      if ( s.clock_pin || !path_under( module_of( nl.cells[s.cell].instance_path ), owner ) )
        return false;
    if ( max_fanout_ && conn.fanout( src ) - freed + conn.fanout( out ) > *max_fanout_ )
      return false;
    for ( auto const& s : conn.sinks[out] )
      for ( auto& n : ed_.cell( s.cell ).input_nets )
        if ( n == out )
          n = src;
    return true;
  }

  NetlistEditor& ed_;
  Library const& lib_;
  std::string stem_;
  std::optional<std::size_t> max_fanout_;
  LibCell const* inv_{ nullptr };
  LibCell const* buf_{ nullptr };
  std::array<std::size_t, 6> applied_{};
};

/*! \brief Restructured, functionally equivalent variant of a stage-G netlist (stage G_PLUS). */
inline Netlist equiv_transform( Netlist const& g, Library const& lib, std::size_t k, std::uint64_t seed )
{
  if ( g.stage != Stage::G )
    throw argument_error( "equiv_transform expects a stage G netlist" );
  if ( k == 0 )
  {
    auto out = g;
    out.stage = Stage::G_PLUS;
    return out;
  }
  NetlistEditor ed( g, lib );
  Rewriter rw( ed, "eq" );
  rng_t rng( seed );
  rw.run( k, rng );
  return ed.finish( Stage::G_PLUS );
}

} // namespace pwrgraph
