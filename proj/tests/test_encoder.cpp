#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>

#include <pwrgraph/nn/attention.hpp>
#include <pwrgraph/nn/encoder.hpp>

using namespace pwrgraph;

namespace
{

struct RandomGraph
{
  GraphTopology topo;
  Eigen::MatrixXd input;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
};

RandomGraph random_graph( std::size_t n, std::size_t avg_fanout, std::uint64_t seed )
{
  std::mt19937_64 rng( seed );
  RandomGraph g;
  for ( std::uint32_t v = 1; v < n; ++v )
    for ( std::size_t k = 0; k < avg_fanout; ++k )
      g.edges.emplace_back( static_cast<std::uint32_t>( rng() % v ), v );
  g.topo = graph_topology( n, g.edges );
  g.input = Eigen::MatrixXd::Zero( static_cast<Eigen::Index>( n ), encoder_input_width );
  std::uniform_real_distribution<double> u( 0.0, 1.0 );
  for ( Eigen::Index i = 0; i < g.input.rows(); ++i )
  {
    g.input( i, static_cast<Eigen::Index>( rng() % node_type_count ) ) = 1.0;
    g.input( i, feature_toggle ) = static_cast<double>( rng() & 1u );
    g.input( i, feature_internal_energy ) = 0.002 + 0.01 * u( rng );
    g.input( i, feature_leakage ) = 1.0 + 5.0 * u( rng );
  }
  return g;
}

EncoderWeights small_weights( double beta = 0.5, std::uint64_t seed = 3 )
{
  EncoderConfig cfg;
  cfg.embed_dim = 8;
  cfg.beta = beta;
  cfg.seed = seed;
  return init_weights( cfg );
}

/*! Dense evaluation of the attention formula. */
Eigen::MatrixXd dense_attention( Eigen::MatrixXd const& Q, Eigen::MatrixXd const& K, Eigen::MatrixXd const& V, double beta )
{
  auto const n = Q.rows();
  Eigen::MatrixXd out( n, V.cols() );
  for ( Eigen::Index i = 0; i < n; ++i )
  {
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero( V.cols() );
    double den = 0.0;
    Eigen::RowVectorXd const qi = Q.row( i ) / std::max( Q.row( i ).norm(), 1e-12 );
    for ( Eigen::Index j = 0; j < n; ++j )
    {
      Eigen::RowVectorXd const kj = K.row( j ) / std::max( K.row( j ).norm(), 1e-12 );
      double const s = 1.0 + qi.dot( kj );
      acc += s * V.row( j );
      den += s;
    }
    out.row( i ) = beta * V.row( i ) + ( 1.0 - beta ) * acc / std::max( den, 1e-12 );
  }
  return out;
}

Eigen::MatrixXd random_matrix( Eigen::Index r, Eigen::Index c, std::uint64_t seed )
{
  std::mt19937_64 rng( seed );
  std::normal_distribution<double> nd;
  Eigen::MatrixXd m( r, c );
  for ( Eigen::Index i = 0; i < m.size(); ++i )
    m.data()[i] = nd( rng );
  return m;
}

} // namespace

TEST( EncoderInit, SeededAndShaped )
{
  auto const a = small_weights(), b = small_weights();
  EXPECT_EQ( a, b );
  EXPECT_NE( a, small_weights( 0.5, 4 ) );
  ASSERT_EQ( a.params.size(), 2u + 3u * 2u + 6u + 2u );
  EXPECT_EQ( a.params[EncoderWeights::input_w].rows(), static_cast<Eigen::Index>( encoder_input_width ) );
  for ( std::size_t i = 0; i < a.params.size(); ++i )
    EXPECT_EQ( a.params[i].cols(), 8 ) << a.params.names[i];
  EXPECT_EQ( a.params[a.out_b()].rows(), 1 );
  EXPECT_TRUE( a.params.all_finite() );
}

TEST( EncoderInit, EntryScaleFollowsFanIn )
{
  EncoderConfig cfg;
  cfg.embed_dim = 64;
  auto const w = init_weights( cfg );
  std::vector<double> entries;
  for ( std::size_t i = 0; i < w.params.size(); ++i )
    if ( w.params[i].rows() == 64 )
      entries.insert( entries.end(), w.params[i].data(), w.params[i].data() + w.params[i].size() );
  ASSERT_GE( entries.size(), 10000u );
  double const mean = std::accumulate( entries.begin(), entries.end(), 0.0 ) / static_cast<double>( entries.size() );
  double var = 0.0;
  for ( auto x : entries )
    var += ( x - mean ) * ( x - mean );
  double const sd = std::sqrt( var / static_cast<double>( entries.size() ) );
  EXPECT_NEAR( sd, 1.0 / 8.0, 0.2 / 8.0 );
}

TEST( EncoderInit, RejectsBadConfig )
{
  EncoderConfig cfg;
  cfg.embed_dim = 4;
  EXPECT_THROW( init_weights( cfg ), argument_error );
  cfg.embed_dim = 8;
  cfg.mp_layers = 0;
  EXPECT_THROW( init_weights( cfg ), argument_error );
  cfg.mp_layers = 1;
  cfg.beta = 1.5;
  EXPECT_THROW( init_weights( cfg ), argument_error );
}

TEST( Attention, SingleNodeReturnsValue )
{
  auto const Q = random_matrix( 1, 5, 1 ), K = random_matrix( 1, 5, 2 ), V = random_matrix( 1, 5, 3 );
  EXPECT_TRUE( linear_attention( Q, K, V, 0.3 ).isApprox( V, 1e-12 ) );
}

TEST( Attention, DuplicateRowsGiveDuplicateOutputs )
{
  Eigen::MatrixXd Q = random_matrix( 6, 4, 4 ), K = random_matrix( 6, 4, 5 ), V = random_matrix( 6, 4, 6 );
  Q.row( 4 ) = Q.row( 1 );
  K.row( 4 ) = K.row( 1 );
  V.row( 4 ) = V.row( 1 );
  auto const Z = linear_attention( Q, K, V, 0.5 );
  EXPECT_LT( ( Z.row( 4 ) - Z.row( 1 ) ).norm(), 1e-12 );
}

TEST( Attention, MatchesDenseFormula )
{
  for ( Eigen::Index n : { 1, 2, 7, 33, 64 } )
    for ( double beta : { 0.0, 0.5, 1.0 } )
    {
      auto const Q = random_matrix( n, 8, 10 + n ), K = random_matrix( n, 8, 20 + n ), V = random_matrix( n, 8, 30 + n );
      auto const fast = linear_attention( Q, K, V, beta );
      auto const dense = dense_attention( Q, K, V, beta );
      EXPECT_LT( ( fast - dense ).cwiseAbs().maxCoeff(), 1e-10 ) << "n=" << n << " beta=" << beta;
    }
  EXPECT_THROW( linear_attention( random_matrix( 3, 4, 1 ), random_matrix( 2, 4, 1 ), random_matrix( 3, 4, 1 ), 0.5 ), argument_error );
}

TEST( Encode, SingleNodeGraph )
{
  auto const g = random_graph( 1, 0, 1 );
  auto const e = encode( small_weights(), g.input, g.topo );
  ASSERT_EQ( e.nodes.rows(), 1 );
  EXPECT_TRUE( e.graph.isApprox( e.nodes.row( 0 ) ) );
  EXPECT_TRUE( e.nodes.allFinite() );
}

TEST( Encode, PermutationEquivariance )
{
  auto const g = random_graph( 40, 2, 7 );
  auto const w = small_weights();
  std::vector<std::uint32_t> perm( 40 );
  std::iota( perm.begin(), perm.end(), 0u );
  std::shuffle( perm.begin(), perm.end(), std::mt19937_64( 9 ) );
  Eigen::MatrixXd x2( g.input.rows(), g.input.cols() );
  for ( std::size_t i = 0; i < perm.size(); ++i )
    x2.row( perm[i] ) = g.input.row( static_cast<Eigen::Index>( i ) );
  std::vector<std::pair<std::uint32_t, std::uint32_t>> e2;
  for ( auto [a, b] : g.edges )
    e2.emplace_back( perm[a], perm[b] );
  auto const a = encode( w, g.input, g.topo );
  auto const b = encode( w, x2, graph_topology( 40, e2 ) );
  EXPECT_LT( ( a.graph - b.graph ).cwiseAbs().maxCoeff(), 1e-12 );
  for ( std::size_t i = 0; i < perm.size(); ++i )
    EXPECT_LT( ( a.nodes.row( static_cast<Eigen::Index>( i ) ) - b.nodes.row( perm[i] ) ).cwiseAbs().maxCoeff(), 1e-12 );
}

TEST( Encode, ShapeErrors )
{
  auto const g = random_graph( 5, 1, 1 );
  EXPECT_THROW( encode( small_weights(), g.input.topRows( 4 ), g.topo ), argument_error );
  EXPECT_THROW( encoder_input( Eigen::MatrixXd::Zero( 3, 5 ) ), argument_error );
}

TEST( EncodeBackward, ZeroUpstreamGivesZeroGradients )
{
  auto const g = random_graph( 10, 2, 2 );
  auto const w = small_weights();
  EncodeCache c;
  encode( w, g.input, g.topo, &c );
  auto grads = w.params.zeros_like();
  encode_backward( w, c, g.topo, Eigen::MatrixXd::Zero( 10, 8 ), Eigen::RowVectorXd::Zero( 8 ), grads );
  for ( std::size_t i = 0; i < grads.size(); ++i )
    EXPECT_EQ( grads[i].cwiseAbs().maxCoeff(), 0.0 ) << grads.names[i];
}

TEST( EncodeBackward, MatchesFiniteDifferences )
{
  auto const g = random_graph( 10, 2, 5 );
  auto w = small_weights();
  auto const R = random_matrix( 10, 8, 77 );
  Eigen::RowVectorXd const r = random_matrix( 1, 8, 78 ).row( 0 );
  auto loss = [&]( EncoderWeights const& ww ) {
    auto const e = encode( ww, g.input, g.topo );
    return ( e.nodes.array() * R.array() ).sum() + e.graph.dot( r );
  };
  EncodeCache c;
  encode( w, g.input, g.topo, &c );
  auto grads = w.params.zeros_like();
  encode_backward( w, c, g.topo, R, r, grads );

  double const h = 1e-5;
  for ( std::size_t p = 0; p < w.params.size(); ++p )
    for ( Eigen::Index k = 0; k < w.params[p].size(); ++k )
    {
      double& x = w.params.values[p].data()[k];
      double const x0 = x;
      x = x0 + h;
      double const up = loss( w );
      x = x0 - h;
      double const down = loss( w );
      x = x0;
      double const fd = ( up - down ) / ( 2 * h );
      double const an = grads[p].data()[k];
      EXPECT_LE( std::abs( fd - an ), 1e-4 * std::max( { std::abs( fd ), std::abs( an ), 1e-3 } ) )
          << w.params.names[p] << "[" << k << "] fd=" << fd << " analytic=" << an;
    }
}

TEST( EncodeBackward, QueryKeyDeadWhenBetaIsOne )
{
  auto const g = random_graph( 12, 2, 6 );
  auto const w = small_weights( 1.0 );
  EncodeCache c;
  encode( w, g.input, g.topo, &c );
  auto grads = w.params.zeros_like();
  encode_backward( w, c, g.topo, random_matrix( 12, 8, 1 ), random_matrix( 1, 8, 2 ).row( 0 ), grads );
  for ( std::size_t k = 0; k < 4; ++k )
    EXPECT_EQ( grads[w.attn( k )].cwiseAbs().maxCoeff(), 0.0 ) << grads.names[w.attn( k )];
  EXPECT_GT( grads[w.attn( 4 )].cwiseAbs().maxCoeff(), 0.0 );
}

TEST( Encode, RuntimeGrowsLinearly )
{
  EncoderConfig cfg;
  cfg.embed_dim = 32;
  auto const w = init_weights( cfg );
  auto time_of = [&]( std::size_t n ) {
    auto const g = random_graph( n, 2, n );
    double best = 1e9;
    for ( int rep = 0; rep < 5; ++rep )
    {
      auto const t0 = std::chrono::steady_clock::now();
      auto const e = encode( w, g.input, g.topo );
      best = std::min( best, std::chrono::duration<double>( std::chrono::steady_clock::now() - t0 ).count() );
      EXPECT_TRUE( e.graph.allFinite() );
    }
    return best;
  };
  double const t1 = time_of( 1000 ), t2 = time_of( 2000 ), t4 = time_of( 4000 );
  EXPECT_LE( t2 / t1, 2.5 );
  EXPECT_LE( t4 / t2, 2.5 );
}
