#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "../core/graph.hpp"
#include "../segment/sample.hpp"
#include "../util/rng.hpp"
#include "attention.hpp"
#include "params.hpp"

namespace pwrgraph
{

/*! Encoder input width: node features plus the two mask indicator channels (toggle, type). */
inline constexpr std::size_t encoder_input_width = feature_width + 2;
inline constexpr std::size_t mask_toggle_channel = feature_width;
inline constexpr std::size_t mask_type_channel = feature_width + 1;

struct EncoderConfig
{
  std::size_t embed_dim{ 64 };
  std::size_t mp_layers{ 2 };
  double beta{ 0.5 };
  std::uint64_t seed{ 1 };

  void validate() const
  {
    if ( embed_dim < 8 )
      throw argument_error( "encoder embed_dim must be at least 8" );
    if ( mp_layers < 1 )
      throw argument_error( "encoder mp_layers must be at least 1" );
    if ( !( beta >= 0.0 && beta <= 1.0 ) )
      throw argument_error( "encoder beta must lie in [0, 1]" );
  }

  bool operator==( EncoderConfig const& ) const = default;
};

/*! \brief Encoder parameters in a fixed order:
 * input.{weight,bias}, mp<l>.{pred,succ,bias}, attn.{q,k,v}.{weight,bias}, out.{weight,bias}.
 * Biases are 1 x d row matrices.
 */
struct EncoderWeights
{
  EncoderConfig config;
  ParamSet params;

  static constexpr std::size_t input_w = 0, input_b = 1;
  std::size_t mp_pred( std::size_t l ) const { return 2 + 3 * l; }
  std::size_t mp_succ( std::size_t l ) const { return 3 + 3 * l; }
  std::size_t mp_bias( std::size_t l ) const { return 4 + 3 * l; }
  std::size_t attn( std::size_t k ) const { return 2 + 3 * config.mp_layers + k; } ///< q.w, q.b, k.w, k.b, v.w, v.b
  std::size_t out_w() const { return attn( 6 ); }
  std::size_t out_b() const { return attn( 7 ); }

  bool operator==( EncoderWeights const& ) const = default;
};

/*! \brief Seeded init: weights ~ N(0, 1/fan_in), biases zero. */
inline EncoderWeights init_weights( EncoderConfig const& cfg )
{
  cfg.validate();
  EncoderWeights w;
  w.config = cfg;
  rng_t rng( derive_seed( cfg.seed, 0xe7c ) );
  auto const d = static_cast<Eigen::Index>( cfg.embed_dim );
  auto mat = [&]( Eigen::Index rows, Eigen::Index cols ) {
    std::normal_distribution<double> nd( 0.0, 1.0 / std::sqrt( static_cast<double>( rows ) ) );
    Eigen::MatrixXd m( rows, cols );
    for ( Eigen::Index j = 0; j < cols; ++j )
      for ( Eigen::Index i = 0; i < rows; ++i )
        m( i, j ) = nd( rng );
    return m;
  };
  auto bias = [&] { return Eigen::MatrixXd::Zero( 1, d ); };
  w.params.add( "input.weight", mat( encoder_input_width, d ) );
  w.params.add( "input.bias", bias() );
  for ( std::size_t l = 0; l < cfg.mp_layers; ++l )
  {
    auto const p = "mp" + std::to_string( l );
    w.params.add( p + ".pred", mat( d, d ) );
    w.params.add( p + ".succ", mat( d, d ) );
    w.params.add( p + ".bias", bias() );
  }
  for ( char const* k : { "q", "k", "v" } )
  {
    w.params.add( std::string( "attn." ) + k + ".weight", mat( d, d ) );
    w.params.add( std::string( "attn." ) + k + ".bias", bias() );
  }
  w.params.add( "out.weight", mat( d, d ) );
  w.params.add( "out.bias", bias() );
  return w;
}

/*! \brief Row-normalized predecessor and successor averaging operators of a graph. */
struct GraphTopology
{
  using sparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;
  sparse pred, succ;
  std::size_t n{ 0 };
};

inline GraphTopology graph_topology( std::size_t n, std::vector<std::pair<std::uint32_t, std::uint32_t>> const& edges )
{
  GraphTopology t;
  t.n = n;
  std::vector<double> in_deg( n, 0.0 ), out_deg( n, 0.0 );
  for ( auto const& [a, b] : edges )
  {
    out_deg[a] += 1.0;
    in_deg[b] += 1.0;
  }
  std::vector<Eigen::Triplet<double>> tp, ts;
  for ( auto const& [a, b] : edges )
  {
    tp.emplace_back( b, a, 1.0 / in_deg[b] );
    ts.emplace_back( a, b, 1.0 / out_deg[a] );
  }
  auto const N = static_cast<Eigen::Index>( n );
  t.pred.resize( N, N );
  t.succ.resize( N, N );
  t.pred.setFromTriplets( tp.begin(), tp.end() );
  t.succ.setFromTriplets( ts.begin(), ts.end() );
  return t;
}

inline GraphTopology graph_topology( DirectedCircuitGraph const& g ) { return graph_topology( g.size(), g.edges ); }

/*! \brief Fixed per-channel scaling that brings energies (pJ) and leakage (nW) to O(1). */
inline Eigen::RowVectorXd encoder_input_scale()
{
  Eigen::RowVectorXd s = Eigen::RowVectorXd::Ones( encoder_input_width );
  s( feature_internal_energy ) = 100.0;
  s( feature_leakage ) = 0.2;
  return s;
}

/*! \brief Unmasked encoder input: features with zero mask channels. */
inline Eigen::MatrixXd encoder_input( Eigen::MatrixXd const& features )
{
  if ( features.cols() != static_cast<Eigen::Index>( feature_width ) )
    throw argument_error( "encoder_input: expected " + std::to_string( feature_width ) + " feature columns" );
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero( features.rows(), encoder_input_width );
  x.leftCols( feature_width ) = features;
  return x;
}

struct Embeddings
{
  Eigen::MatrixXd nodes;   ///< n x d
  Eigen::RowVectorXd graph; ///< mean of node rows
};

/*! \brief Forward intermediates kept for encode_backward. */
struct EncodeCache
{
  Eigen::MatrixXd x;                  ///< scaled input
  std::vector<Eigen::MatrixXd> h;     ///< h[0] = input layer output, h[l+1] = after MP layer l
  std::vector<Eigen::MatrixXd> pre;   ///< pre-activations, parallel to h
  std::vector<Eigen::MatrixXd> agg_p, agg_s;
  Eigen::MatrixXd q, k, v, z;
  AttentionCache attn;
};

/*! \brief Node and graph embeddings.
 *
 *   H0 = ReLU(X W_in + b_in)
 *   H_{l+1} = ReLU(H_l + mean_pred(H_l) W_pred + mean_succ(H_l) W_succ + b_l)
 *   Z = linear_attention(H W_q + b_q, H W_k + b_k, H W_v + b_v)
 *   E = Z W_out + b_out,  E_g = mean over rows of E
 */
inline Embeddings encode( EncoderWeights const& w, Eigen::MatrixXd const& input, GraphTopology const& topo,
                          EncodeCache* cache = nullptr )
{
  auto const n = input.rows();
  if ( n == 0 )
    throw argument_error( "encode: empty graph" );
  if ( input.cols() != static_cast<Eigen::Index>( encoder_input_width ) || static_cast<std::size_t>( n ) != topo.n )
    throw argument_error( "encode: input shape does not match the graph" );
  EncodeCache local;
  auto& c = cache ? *cache : local;
  auto const& P = w.params;
  auto relu = []( Eigen::MatrixXd const& m ) { return m.cwiseMax( 0.0 ); };
  auto affine = [&]( Eigen::MatrixXd const& x, std::size_t wi, std::size_t bi ) {
    Eigen::MatrixXd y = x * P[wi];
    y.rowwise() += P[bi].row( 0 );
    return y;
  };

  c.x = input.array().rowwise() * encoder_input_scale().array();
  c.h.clear();
  c.pre.clear();
  c.agg_p.clear();
  c.agg_s.clear();
  c.pre.push_back( affine( c.x, EncoderWeights::input_w, EncoderWeights::input_b ) );
  c.h.push_back( relu( c.pre.back() ) );
  for ( std::size_t l = 0; l < w.config.mp_layers; ++l )
  {
    auto const& h = c.h.back();
    c.agg_p.push_back( topo.pred * h );
    c.agg_s.push_back( topo.succ * h );
    Eigen::MatrixXd pre = h + c.agg_p.back() * P[w.mp_pred( l )] + c.agg_s.back() * P[w.mp_succ( l )];
    pre.rowwise() += P[w.mp_bias( l )].row( 0 );
    c.pre.push_back( std::move( pre ) );
    c.h.push_back( relu( c.pre.back() ) );
  }
  auto const& h = c.h.back();
  c.q = affine( h, w.attn( 0 ), w.attn( 1 ) );
  c.k = affine( h, w.attn( 2 ), w.attn( 3 ) );
  c.v = affine( h, w.attn( 4 ), w.attn( 5 ) );
  c.z = linear_attention( c.q, c.k, c.v, w.config.beta, &c.attn );
  Embeddings e;
  e.nodes = affine( c.z, w.out_w(), w.out_b() );
  e.graph = e.nodes.colwise().mean();
  return e;
}

inline Embeddings encode( EncoderWeights const& w, SubModuleSample const& s )
{
  return encode( w, encoder_input( s.features ), graph_topology( *s.graph ) );
}

/*! \brief Accumulate into `grads` the weight gradients for upstream dE (nodes) and dE_g (graph). */
inline void encode_backward( EncoderWeights const& w, EncodeCache const& c, GraphTopology const& topo,
                             Eigen::MatrixXd const& d_nodes, Eigen::RowVectorXd const& d_graph, ParamSet& grads )
{
  auto const& P = w.params;
  auto const n = c.x.rows();
  if ( d_nodes.rows() != n || d_nodes.cols() != static_cast<Eigen::Index>( w.config.embed_dim ) ||
       d_graph.size() != static_cast<Eigen::Index>( w.config.embed_dim ) )
    throw argument_error( "encode_backward: upstream gradient shape mismatch" );
  w.params.check_shape( grads );

  Eigen::MatrixXd dE = d_nodes;
  dE.rowwise() += d_graph / static_cast<double>( n );
  grads[w.out_w()].noalias() += c.z.transpose() * dE;
  grads[w.out_b()] += dE.colwise().sum();
  Eigen::MatrixXd const dZ = dE * P[w.out_w()].transpose();

  Eigen::MatrixXd dQ, dK, dV;
  linear_attention_backward( c.v, c.attn, dZ, dQ, dK, dV );
  auto const& h = c.h.back();
  Eigen::MatrixXd dH = Eigen::MatrixXd::Zero( h.rows(), h.cols() );
  Eigen::MatrixXd const* dqkv[3] = { &dQ, &dK, &dV };
  for ( std::size_t k = 0; k < 3; ++k )
  {
    grads[w.attn( 2 * k )].noalias() += h.transpose() * *dqkv[k];
    grads[w.attn( 2 * k + 1 )] += dqkv[k]->colwise().sum();
    dH.noalias() += *dqkv[k] * P[w.attn( 2 * k )].transpose();
  }

  for ( std::size_t l = w.config.mp_layers; l-- > 0; )
  {
    Eigen::MatrixXd const dpre = dH.cwiseProduct( ( c.pre[l + 1].array() > 0.0 ).cast<double>().matrix() );
    grads[w.mp_pred( l )].noalias() += c.agg_p[l].transpose() * dpre;
    grads[w.mp_succ( l )].noalias() += c.agg_s[l].transpose() * dpre;
    grads[w.mp_bias( l )] += dpre.colwise().sum();
    Eigen::MatrixXd next = dpre;
    next.noalias() += topo.pred.transpose() * ( dpre * P[w.mp_pred( l )].transpose() );
    next.noalias() += topo.succ.transpose() * ( dpre * P[w.mp_succ( l )].transpose() );
    dH = std::move( next );
  }
  Eigen::MatrixXd const dpre0 = dH.cwiseProduct( ( c.pre[0].array() > 0.0 ).cast<double>().matrix() );
  grads[EncoderWeights::input_w].noalias() += c.x.transpose() * dpre0;
  grads[EncoderWeights::input_b] += dpre0.colwise().sum();
}

/*! \brief Weight gradients of <d_nodes, E> + <d_graph, E_g> for one sample. */
inline ParamSet encode_grad( EncoderWeights const& w, SubModuleSample const& s, Eigen::MatrixXd const& d_nodes,
                             Eigen::RowVectorXd const& d_graph )
{
  auto const topo = graph_topology( *s.graph );
  EncodeCache cache;
  encode( w, encoder_input( s.features ), topo, &cache );
  auto grads = w.params.zeros_like();
  encode_backward( w, cache, topo, d_nodes, d_graph, grads );
  return grads;
}

} // namespace pwrgraph
