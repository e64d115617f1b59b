#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "../nn/encoder.hpp"
#include "losses.hpp"
#include "masking.hpp"

namespace pwrgraph
{

/*! Task indices, in loss order. */
enum class Task : std::uint8_t
{
  masked_toggle,
  masked_type,
  size,
  align_restructured,
  align_layout
};

struct LossBreakdown
{
  double l_mt{ 0.0 }, l_mn{ 0.0 }, l_size{ 0.0 }, l_cl1{ 0.0 }, l_cl2{ 0.0 };

  double total() const { return l_mt + l_mn + l_size + l_cl1 + l_cl2; }

  LossBreakdown& operator+=( LossBreakdown const& o )
  {
    l_mt += o.l_mt;
    l_mn += o.l_mn;
    l_size += o.l_size;
    l_cl1 += o.l_cl1;
    l_cl2 += o.l_cl2;
    return *this;
  }
  LossBreakdown& operator/=( double k )
  {
    l_mt /= k;
    l_mn /= k;
    l_size /= k;
    l_cl1 /= k;
    l_cl2 /= k;
    return *this;
  }
};

/*! \brief Encoder plus the three pre-training heads (two-layer perceptrons of width d). */
struct PretrainModel
{
  EncoderWeights encoder;
  ParamSet heads; ///< toggle.{w1,b1,w2,b2}, type.{...}, size.{...}

  static constexpr std::size_t toggle_head = 0, type_head = 4, size_head = 8;

  bool operator==( PretrainModel const& ) const = default;
};

inline PretrainModel init_model( EncoderConfig const& cfg )
{
  PretrainModel m;
  m.encoder = init_weights( cfg );
  rng_t rng( derive_seed( cfg.seed, 0x4ead ) );
  auto const d = static_cast<Eigen::Index>( cfg.embed_dim );
  auto mat = [&]( Eigen::Index rows, Eigen::Index cols ) {
    std::normal_distribution<double> nd( 0.0, 1.0 / std::sqrt( static_cast<double>( rows ) ) );
    Eigen::MatrixXd x( rows, cols );
    for ( Eigen::Index j = 0; j < cols; ++j )
      for ( Eigen::Index i = 0; i < rows; ++i )
        x( i, j ) = nd( rng );
    return x;
  };
  for ( auto const& [name, out] : { std::pair<char const*, Eigen::Index>{ "toggle", 2 }, { "type", node_type_count }, { "size", 1 } } )
  {
    m.heads.add( std::string( name ) + ".w1", mat( d, d ) );
    m.heads.add( std::string( name ) + ".b1", Eigen::MatrixXd::Zero( 1, d ) );
    m.heads.add( std::string( name ) + ".w2", mat( d, out ) );
    m.heads.add( std::string( name ) + ".b2", Eigen::MatrixXd::Zero( 1, out ) );
  }
  return m;
}

namespace detail
{

struct mlp_cache
{
  Eigen::MatrixXd x, pre, h;
};

inline Eigen::MatrixXd mlp_forward( ParamSet const& p, std::size_t base, Eigen::MatrixXd const& x, mlp_cache& c )
{
  c.x = x;
  c.pre = x * p[base];
  c.pre.rowwise() += p[base + 1].row( 0 );
  c.h = c.pre.cwiseMax( 0.0 );
  Eigen::MatrixXd y = c.h * p[base + 2];
  y.rowwise() += p[base + 3].row( 0 );
  return y;
}

inline Eigen::MatrixXd mlp_backward( ParamSet const& p, std::size_t base, mlp_cache const& c, Eigen::MatrixXd const& dy,
                                     ParamSet& g )
{
  g[base + 2].noalias() += c.h.transpose() * dy;
  g[base + 3] += dy.colwise().sum();
  Eigen::MatrixXd const dpre = ( dy * p[base + 2].transpose() ).cwiseProduct( ( c.pre.array() > 0.0 ).cast<double>().matrix() );
  g[base].noalias() += c.x.transpose() * dpre;
  g[base + 1] += dpre.colwise().sum();
  return dpre * p[base].transpose();
}

inline Eigen::MatrixXd softmax_rows( Eigen::MatrixXd const& logits )
{
  Eigen::MatrixXd p = logits;
  for ( Eigen::Index i = 0; i < p.rows(); ++i )
  {
    p.row( i ).array() -= p.row( i ).maxCoeff();
    p.row( i ) = p.row( i ).array().exp().matrix();
    p.row( i ) /= p.row( i ).sum();
  }
  return p;
}

/*! Mean InfoNCE over rows: anchor a_i, positive b_i, negatives b_j (j != i). Adds gradients to da, db. */
inline double info_nce_batch( Eigen::MatrixXd const& a, Eigen::MatrixXd const& b, double tau, Eigen::MatrixXd& da,
                              Eigen::MatrixXd& db )
{
  auto const B = a.rows();
  Eigen::VectorXd na, nb;
  Eigen::MatrixXd an, bn;
  normalize_rows( a, an, na );
  normalize_rows( b, bn, nb );
  for ( Eigen::Index i = 0; i < B; ++i )
    if ( na( i ) <= attention_eps || nb( i ) <= attention_eps )
      throw argument_error( "info_nce: zero-norm embedding" );
  Eigen::MatrixXd const logits = ( an * bn.transpose() ) / tau;
  Eigen::MatrixXd const p = softmax_rows( logits );
  double loss = 0.0;
  for ( Eigen::Index i = 0; i < B; ++i )
  {
    double const mx = logits.row( i ).maxCoeff();
    loss += -( logits( i, i ) - mx - std::log( ( logits.row( i ).array() - mx ).exp().sum() ) );
  }
  Eigen::MatrixXd G = p;
  G.diagonal().array() -= 1.0;
  G /= ( tau * static_cast<double>( B ) );
  da += normalize_rows_backward( an, na, G * bn );
  db += normalize_rows_backward( bn, nb, G.transpose() * an );
  return loss / static_cast<double>( B );
}

} // namespace detail

/*! \brief One aligned training unit: masked stage-G sample plus unmasked G, G_PLUS and P samples. */
struct PretrainItem
{
  MaskedSample masked;
  SubModuleSample g, gp, p;
};

struct LossOptions
{
  double tau{ 0.07 };
  bool size_log2{ true };
  bool stop_grad_p{ false };
  std::array<bool, 5> tasks{ true, true, true, true, true };
};

/*! \brief Pre-training gradients, same layout as the model. */
struct ModelGrads
{
  ParamSet encoder, heads;
};

inline double size_target( std::size_t n, bool log2_scale )
{
  return log2_scale ? std::log2( static_cast<double>( n ) ) : static_cast<double>( n );
}

/*! \brief Joint loss L = L_MT + L_MN + L_Size + L_CL1 + L_CL2 over a batch, with gradients if `grads` is set.
 *
 * Masked-node terms average over all masked nodes of the batch; the other
 * terms average over batch items. Disabled tasks contribute exactly 0.
 */
inline LossBreakdown total_loss( PretrainModel const& model, std::vector<PretrainItem> const& batch, LossOptions const& opt,
                                 ModelGrads* grads = nullptr )
{
  auto const B = batch.size();
  if ( B < 2 )
    throw argument_error( "total_loss: a batch needs at least 2 items (negatives come from the batch)" );
  auto const d = static_cast<Eigen::Index>( model.encoder.config.embed_dim );
  auto const& tasks = opt.tasks;
  bool const need_masked = tasks[0] || tasks[1];
  bool const need_plus = tasks[3];
  bool const need_p = tasks[4];
  bool const need_g = tasks[2] || tasks[3] || tasks[4];

  struct enc
  {
    GraphTopology topo;
    EncodeCache cache;
    Embeddings emb;
  };
  std::vector<enc> em( B ), eg( B ), egp( B ), ep( B );
  std::size_t n_toggle = 0, n_type = 0;
  for ( std::size_t i = 0; i < B; ++i )
  {
    auto const& it = batch[i];
    if ( need_masked )
    {
      em[i].topo = graph_topology( *it.masked.base.graph );
      em[i].emb = encode( model.encoder, it.masked.input, em[i].topo, &em[i].cache );
      n_toggle += it.masked.toggle_nodes.size();
      n_type += it.masked.type_nodes.size();
    }
    auto run = [&]( enc& e, SubModuleSample const& s ) {
      e.topo = graph_topology( *s.graph );
      e.emb = encode( model.encoder, encoder_input( s.features ), e.topo, &e.cache );
    };
    if ( need_g )
      run( eg[i], it.g );
    if ( need_plus )
      run( egp[i], it.gp );
    if ( need_p )
      run( ep[i], it.p );
  }

  LossBreakdown L;
  std::vector<Eigen::MatrixXd> d_masked( B );
  Eigen::MatrixXd dEg = Eigen::MatrixXd::Zero( static_cast<Eigen::Index>( B ), d );
  Eigen::MatrixXd dEgp = dEg, dEp = dEg;
  ParamSet head_grads = model.heads.zeros_like();
  for ( std::size_t i = 0; i < B; ++i )
    if ( need_masked )
      d_masked[i] = Eigen::MatrixXd::Zero( em[i].emb.nodes.rows(), d );

  // masked toggle / type: cross-entropy over masked nodes
  auto masked_term = [&]( bool on, std::size_t head, std::size_t total, auto nodes_of, auto truth_of ) {
    if ( !on || total == 0 )
      return 0.0;
    double loss = 0.0;
    for ( std::size_t i = 0; i < B; ++i )
    {
      auto const& nodes = nodes_of( batch[i].masked );
      if ( nodes.empty() )
        continue;
      Eigen::MatrixXd x( static_cast<Eigen::Index>( nodes.size() ), d );
      for ( std::size_t r = 0; r < nodes.size(); ++r )
        x.row( static_cast<Eigen::Index>( r ) ) = em[i].emb.nodes.row( nodes[r] );
      detail::mlp_cache c;
      Eigen::MatrixXd const logits = detail::mlp_forward( model.heads, head, x, c );
      Eigen::MatrixXd const p = detail::softmax_rows( logits );
      Eigen::MatrixXd dlogits = p;
      for ( std::size_t r = 0; r < nodes.size(); ++r )
      {
        auto const t = static_cast<Eigen::Index>( truth_of( batch[i].masked, r ) );
        auto const row = logits.row( static_cast<Eigen::Index>( r ) );
        double const mx = row.maxCoeff();
        loss -= row( t ) - mx - std::log( ( row.array() - mx ).exp().sum() );
        dlogits( static_cast<Eigen::Index>( r ), t ) -= 1.0;
      }
      if ( grads )
      {
        dlogits /= static_cast<double>( total );
        Eigen::MatrixXd const dx = detail::mlp_backward( model.heads, head, c, dlogits, head_grads );
        for ( std::size_t r = 0; r < nodes.size(); ++r )
          d_masked[i].row( nodes[r] ) += dx.row( static_cast<Eigen::Index>( r ) );
      }
    }
    return loss / static_cast<double>( total );
  };
  L.l_mt = masked_term( tasks[0], PretrainModel::toggle_head, n_toggle,
                        []( MaskedSample const& m ) -> auto const& { return m.toggle_nodes; },
                        []( MaskedSample const& m, std::size_t r ) { return static_cast<std::size_t>( m.toggle_truth[r] ); } );
  L.l_mn = masked_term( tasks[1], PretrainModel::type_head, n_type,
                        []( MaskedSample const& m ) -> auto const& { return m.type_nodes; },
                        []( MaskedSample const& m, std::size_t r ) { return m.type_truth[r]; } );

  Eigen::MatrixXd Eg( static_cast<Eigen::Index>( B ), d ), Egp = Eg, Ep = Eg;
  for ( std::size_t i = 0; i < B; ++i )
  {
    auto const r = static_cast<Eigen::Index>( i );
    if ( need_g )
      Eg.row( r ) = eg[i].emb.graph;
    if ( need_plus )
      Egp.row( r ) = egp[i].emb.graph;
    if ( need_p )
      Ep.row( r ) = ep[i].emb.graph;
  }

  if ( tasks[2] )
  {
    detail::mlp_cache c;
    Eigen::MatrixXd const pred = detail::mlp_forward( model.heads, PretrainModel::size_head, Eg, c );
    Eigen::MatrixXd dpred( static_cast<Eigen::Index>( B ), 1 );
    for ( std::size_t i = 0; i < B; ++i )
    {
      auto const r = static_cast<Eigen::Index>( i );
      double const e = pred( r, 0 ) - size_target( batch[i].g.graph->size(), opt.size_log2 );
      L.l_size += e * e;
      dpred( r, 0 ) = 2.0 * e / static_cast<double>( B );
    }
    L.l_size /= static_cast<double>( B );
    if ( grads )
      dEg += detail::mlp_backward( model.heads, PretrainModel::size_head, c, dpred, head_grads );
  }
  if ( tasks[3] )
    L.l_cl1 = detail::info_nce_batch( Eg, Egp, opt.tau, dEg, dEgp );
  if ( tasks[4] )
  {
    Eigen::MatrixXd dEp_local = Eigen::MatrixXd::Zero( dEp.rows(), dEp.cols() );
    L.l_cl2 = detail::info_nce_batch( Eg, Ep, opt.tau, dEg, dEp_local );
    if ( !opt.stop_grad_p )
      dEp = dEp_local;
  }

  if ( grads )
  {
    grads->encoder = model.encoder.params.zeros_like();
    grads->heads = std::move( head_grads );
    Eigen::MatrixXd zeros;
    for ( std::size_t i = 0; i < B; ++i )
    {
      auto const r = static_cast<Eigen::Index>( i );
      if ( need_masked )
        encode_backward( model.encoder, em[i].cache, em[i].topo, d_masked[i], Eigen::RowVectorXd::Zero( d ), grads->encoder );
      auto back = [&]( enc const& e, Eigen::RowVectorXd const& dg ) {
        zeros = Eigen::MatrixXd::Zero( e.emb.nodes.rows(), d );
        encode_backward( model.encoder, e.cache, e.topo, zeros, dg, grads->encoder );
      };
      if ( need_g )
        back( eg[i], dEg.row( r ) );
      if ( need_plus )
        back( egp[i], dEgp.row( r ) );
      if ( need_p && !opt.stop_grad_p )
        back( ep[i], dEp.row( r ) );
    }
  }
  return L;
}

/*! \brief Masked-prediction quality on a set of masked samples. */
struct MaskedAccuracy
{
  double type_accuracy{ 0.0 };
  double toggle_balanced_accuracy{ 0.0 };
  std::size_t type_count{ 0 }, toggle_pos{ 0 }, toggle_neg{ 0 };
};

inline MaskedAccuracy masked_accuracy( PretrainModel const& model, std::vector<MaskedSample> const& samples )
{
  MaskedAccuracy a;
  std::size_t type_hit = 0, tp = 0, tn = 0;
  for ( auto const& m : samples )
  {
    auto const topo = graph_topology( *m.base.graph );
    auto const e = encode( model.encoder, m.input, topo );
    auto gather = [&]( std::vector<std::uint32_t> const& nodes ) {
      Eigen::MatrixXd x( static_cast<Eigen::Index>( nodes.size() ), e.nodes.cols() );
      for ( std::size_t r = 0; r < nodes.size(); ++r )
        x.row( static_cast<Eigen::Index>( r ) ) = e.nodes.row( nodes[r] );
      return x;
    };
    detail::mlp_cache c;
    if ( !m.type_nodes.empty() )
    {
      Eigen::MatrixXd const logits = detail::mlp_forward( model.heads, PretrainModel::type_head, gather( m.type_nodes ), c );
      for ( std::size_t r = 0; r < m.type_nodes.size(); ++r )
      {
        Eigen::Index arg;
        logits.row( static_cast<Eigen::Index>( r ) ).maxCoeff( &arg );
        type_hit += static_cast<std::size_t>( arg ) == m.type_truth[r];
        ++a.type_count;
      }
    }
    if ( !m.toggle_nodes.empty() )
    {
      Eigen::MatrixXd const logits = detail::mlp_forward( model.heads, PretrainModel::toggle_head, gather( m.toggle_nodes ), c );
      for ( std::size_t r = 0; r < m.toggle_nodes.size(); ++r )
      {
        bool const pred = logits( static_cast<Eigen::Index>( r ), 1 ) > logits( static_cast<Eigen::Index>( r ), 0 );
        if ( m.toggle_truth[r] )
        {
          ++a.toggle_pos;
          tp += pred;
        }
        else
        {
          ++a.toggle_neg;
          tn += !pred;
        }
      }
    }
  }
  a.type_accuracy = a.type_count ? double( type_hit ) / double( a.type_count ) : 0.0;
  double const tpr = a.toggle_pos ? double( tp ) / double( a.toggle_pos ) : 0.0;
  double const tnr = a.toggle_neg ? double( tn ) / double( a.toggle_neg ) : 0.0;
  a.toggle_balanced_accuracy = 0.5 * ( tpr + tnr );
  return a;
}

} // namespace pwrgraph
