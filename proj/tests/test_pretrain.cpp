#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include <pwrgraph/core/graph.hpp>
#include <pwrgraph/pretrain/adam.hpp>
#include <pwrgraph/pretrain/checkpoint.hpp>
#include <pwrgraph/pretrain/losses.hpp>
#include <pwrgraph/pretrain/masking.hpp>
#include <pwrgraph/pretrain/model.hpp>
#include <pwrgraph/pretrain/trainer.hpp>

#include "fixtures.hpp"

using namespace pwrgraph;

namespace
{

Library const& lib() { return fixture_library(); }

/*! Sample over a 100-inverter chain at cycle 1. */
SubModuleSample chain_sample( std::size_t n = 100 )
{
  std::ostringstream v;
  v << "module top (a, y);\n input a;\n output y;\n";
  for ( std::size_t i = 1; i < n; ++i )
    v << " wire n" << i << ";\n";
  for ( std::size_t i = 0; i < n; ++i )
    v << " INVX1 g" << i << " (.A(" << ( i == 0 ? "a" : "n" + std::to_string( i ) ) << "), .Y("
      << ( i + 1 == n ? "y" : "n" + std::to_string( i + 1 ) ) << "));\n";
  v << "endmodule\n";
  auto const nl = parse_netlist( v.str(), lib() );
  Stimulus s;
  s.inputs = { "a" };
  s.bits = { { 0, 1, 1 } };
  s.n_cycles = 3;
  auto const w = simulate( nl, lib(), s, 3 );
  return annotate( std::make_shared<DirectedCircuitGraph const>( build_graph( nl, lib(), "top" ) ), w, 1 );
}

fixtures::Corpus const& small_corpus()
{
  static auto const c = fixtures::make_corpus( 3, 1, 200, 10, 31 );
  return c;
}

std::vector<PretrainItem> two_items()
{
  auto const& c = small_corpus();
  return { make_item( c.bundles[0], { 0, 0, 3 }, 0.15, 1 ), make_item( c.bundles[1], { 1, 1, 4 }, 0.15, 2 ) };
}

PretrainModel small_model( std::uint64_t seed = 5 )
{
  EncoderConfig cfg;
  cfg.embed_dim = 8;
  cfg.seed = seed;
  return init_model( cfg );
}

} // namespace

TEST( Losses, MaskedToggle )
{
  Eigen::VectorXd half = Eigen::VectorXd::Constant( 4, 0.5 );
  EXPECT_NEAR( loss_masked_toggle( half, { 1, 0, 1, 0 } ), std::log( 2.0 ), 1e-9 );
  Eigen::VectorXd p( 2 );
  p << 0.9, 0.2;
  EXPECT_NEAR( loss_masked_toggle( p, { 1, 0 } ), -( std::log( 0.9 ) + std::log( 0.8 ) ) / 2, 1e-12 );
  EXPECT_NEAR( loss_masked_toggle( p, { 1, 0 } ), 0.1643, 1e-4 );
  Eigen::VectorXd exact( 2 );
  exact << 1.0, 0.0;
  EXPECT_LE( loss_masked_toggle( exact, { 1, 0 } ), 1e-11 );
  EXPECT_THROW( loss_masked_toggle( p, {} ), argument_error );
  EXPECT_THROW( loss_masked_toggle( p, { 1 } ), argument_error );
}

TEST( Losses, MaskedType )
{
  Eigen::MatrixXd uniform = Eigen::MatrixXd::Constant( 3, node_type_count, 1.0 / node_type_count );
  EXPECT_NEAR( loss_masked_type( uniform, { 0, 5, 17 } ), std::log( 18.0 ), 1e-9 );
  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero( 2, node_type_count );
  onehot( 0, 3 ) = onehot( 1, 7 ) = 1.0;
  EXPECT_LE( loss_masked_type( onehot, { 3, 7 } ), 1e-11 );
  Eigen::MatrixXd half = Eigen::MatrixXd::Zero( 1, node_type_count );
  half( 0, 2 ) = 0.5;
  half( 0, 4 ) = 0.5;
  EXPECT_NEAR( loss_masked_type( half, { 2 } ), std::log( 2.0 ), 1e-12 );
}

TEST( Losses, Size )
{
  Eigen::VectorXd p( 1 ), t( 1 );
  p << std::log2( 8.0 );
  t << std::log2( 16.0 );
  EXPECT_DOUBLE_EQ( loss_size( p, t ), 1.0 );
  EXPECT_DOUBLE_EQ( loss_size( t, t ), 0.0 );
  Eigen::VectorXd p2( 2 ), t2( 2 );
  p2 << 3, 5;
  t2 << 4, 5;
  EXPECT_DOUBLE_EQ( loss_size( p2, t2 ), 0.5 );
  EXPECT_THROW( loss_size( p, t2 ), argument_error );
}

TEST( Losses, InfoNceClosedForms )
{
  Eigen::RowVectorXd a( 2 ), pos( 2 ), neg( 2 );
  a << 1, 0;
  pos << 1, 0;
  neg << 0, 1;
  EXPECT_NEAR( info_nce( a, pos, { neg }, 1.0 ), std::log( 1.0 + std::exp( -1.0 ) ), 1e-9 );
  EXPECT_NEAR( info_nce( a, pos, { pos }, 0.07 ), std::log( 2.0 ), 1e-9 );
  EXPECT_NEAR( info_nce( 3.0 * a, pos, { neg }, 1.0 ), info_nce( a, 3.0 * pos, { neg }, 1.0 ), 1e-12 );
  EXPECT_NEAR( info_nce( a, pos, { 3.0 * neg }, 1.0 ), std::log( 1.0 + std::exp( -1.0 ) ), 1e-12 );
  EXPECT_THROW( info_nce( a, pos, { neg }, 0.0 ), argument_error );
  EXPECT_THROW( info_nce( a, Eigen::RowVectorXd::Zero( 2 ), { neg }, 1.0 ), argument_error );
}

TEST( Losses, InfoNceFallsAsPositiveImproves )
{
  Eigen::RowVectorXd a( 2 ), neg( 2 );
  a << 1, 0;
  neg << 0.2, 1;
  double prev = 1e9;
  for ( double angle : { 2.5, 2.0, 1.5, 1.0, 0.5 } )
  {
    Eigen::RowVectorXd pos( 2 );
    pos << std::cos( angle ), std::sin( angle );
    double const l = info_nce( a, pos, { neg }, 0.07 );
    EXPECT_LT( l, prev );
    prev = l;
  }
}

TEST( Masking, CountsAndDeterminism )
{
  auto const s = chain_sample();
  auto const m = apply_mask( s, MaskKind::toggle, 0.15, 9 );
  EXPECT_EQ( m.toggle_nodes.size(), 15u );
  EXPECT_EQ( m.toggle_nodes, apply_mask( s, MaskKind::toggle, 0.15, 9 ).toggle_nodes );
  EXPECT_EQ( m.input, apply_mask( s, MaskKind::toggle, 0.15, 9 ).input );
  for ( auto i : m.toggle_nodes )
  {
    EXPECT_EQ( m.input( i, feature_toggle ), 0.0 );
    EXPECT_EQ( m.input( i, mask_toggle_channel ), 1.0 );
  }

  auto const none = apply_mask( s, MaskKind::type, 0.0, 1 );
  EXPECT_TRUE( none.type_nodes.empty() );
  EXPECT_EQ( none.input, encoder_input( s.features ) );
  auto const all = apply_mask( s, MaskKind::type, 1.0, 1 );
  EXPECT_EQ( all.type_nodes.size(), 100u );
  EXPECT_EQ( all.input.leftCols( node_type_count ).cwiseAbs().sum(), 0.0 );
  EXPECT_THROW( apply_mask( s, MaskKind::type, 1.5, 1 ), argument_error );
}

TEST( Masking, KindsAreDisjoint )
{
  auto const m = apply_masks( chain_sample(), 0.15, 0.15, 4 );
  EXPECT_EQ( m.toggle_nodes.size(), 15u );
  EXPECT_EQ( m.type_nodes.size(), 15u );
  for ( auto i : m.toggle_nodes )
    EXPECT_EQ( std::count( m.type_nodes.begin(), m.type_nodes.end(), i ), 0 );
}

TEST( Masking, HiddenValuesDoNotLeak )
{
  auto const s = chain_sample();
  auto const m = apply_masks( s, 0.15, 0.15, 11 );
  auto altered = s;
  for ( auto i : m.toggle_nodes )
    altered.features( i, feature_toggle ) = 1.0 - altered.features( i, feature_toggle );
  for ( auto i : m.type_nodes )
  {
    altered.features.row( i ).head( node_type_count ).setZero();
    altered.features( i, static_cast<Eigen::Index>( NodeType::XOR ) ) = 1.0;
  }
  EXPECT_EQ( apply_masks( altered, 0.15, 0.15, 11 ).input, m.input );
}

TEST( TotalLoss, ComponentsAddUpAndAreNonNegative )
{
  auto const model = small_model();
  auto const batch = two_items();
  LossOptions opt;
  auto const L = total_loss( model, batch, opt );
  for ( double x : { L.l_mt, L.l_mn, L.l_size, L.l_cl1, L.l_cl2 } )
    EXPECT_GE( x, 0.0 );
  EXPECT_DOUBLE_EQ( L.total(), L.l_mt + L.l_mn + L.l_size + L.l_cl1 + L.l_cl2 );
  double const parts[5] = { L.l_mt, L.l_mn, L.l_size, L.l_cl1, L.l_cl2 };
  for ( std::size_t k = 0; k < 5; ++k )
  {
    auto o = opt;
    o.tasks[k] = false;
    auto const Lk = total_loss( model, batch, o );
    double const pk[5] = { Lk.l_mt, Lk.l_mn, Lk.l_size, Lk.l_cl1, Lk.l_cl2 };
    for ( std::size_t j = 0; j < 5; ++j )
      EXPECT_EQ( pk[j], j == k ? 0.0 : parts[j] ) << "task " << k << " component " << j;
  }
}

TEST( TotalLoss, SingleItemBatchRejected )
{
  auto const b = two_items();
  EXPECT_THROW( total_loss( small_model(), { b[0] }, LossOptions{} ), argument_error );
}

TEST( TotalLoss, GradientMatchesFiniteDifferences )
{
  auto model = small_model( 8 );
  // zero-initialised biases put isolated dead nodes exactly on a ReLU kink
  std::mt19937_64 rng( 12 );
  std::normal_distribution<double> nd( 0.0, 0.05 );
  for ( auto* ps : { &model.encoder.params, &model.heads } )
    for ( auto& m : ps->values )
      for ( Eigen::Index k = 0; k < m.size(); ++k )
        m.data()[k] += nd( rng );
  auto const batch = two_items();
  LossOptions opt;
  ModelGrads g;
  total_loss( model, batch, opt, &g );
  double const h = 1e-5;
  auto check = [&]( ParamSet& p, ParamSet const& grad ) {
    for ( std::size_t i = 0; i < p.size(); ++i )
      for ( Eigen::Index k = 0; k < p[i].size(); ++k )
      {
        double& x = p.values[i].data()[k];
        double const x0 = x;
        x = x0 + h;
        double const up = total_loss( model, batch, opt ).total();
        x = x0 - h;
        double const down = total_loss( model, batch, opt ).total();
        x = x0;
        double const fd = ( up - down ) / ( 2 * h ), an = grad[i].data()[k];
        EXPECT_LE( std::abs( fd - an ), 1e-4 * std::max( { std::abs( fd ), std::abs( an ), 1e-3 } ) )
            << p.names[i] << "[" << k << "] fd=" << fd << " analytic=" << an;
      }
  };
  check( model.encoder.params, g.encoder );
  check( model.heads, g.heads );
}

TEST( TotalLoss, StopGradientLeavesPSideOut )
{
  auto const model = small_model();
  auto const batch = two_items();
  LossOptions opt;
  opt.tasks = { false, false, false, false, true };
  ModelGrads a, b;
  total_loss( model, batch, opt, &a );
  opt.stop_grad_p = true;
  auto const L = total_loss( model, batch, opt, &b );
  EXPECT_GT( L.l_cl2, 0.0 );
  EXPECT_FALSE( a.encoder == b.encoder );
}

TEST( Adam, FirstStepMagnitudeAndZeroGradient )
{
  ParamSet w;
  w.add( "x", Eigen::MatrixXd::Constant( 1, 1, 0.5 ) );
  auto s = AdamState::for_params( w, 1e-4 );
  auto g = w.zeros_like();
  adam_step( w, g, s );
  EXPECT_EQ( w[0]( 0, 0 ), 0.5 );
  s = AdamState::for_params( w, 1e-4 );
  g[0]( 0, 0 ) = 1.0;
  adam_step( w, g, s );
  EXPECT_NEAR( 0.5 - w[0]( 0, 0 ), 1e-4 / ( 1.0 + 1e-8 ), 1e-15 );
  g[0]( 0, 0 ) = std::nan( "" );
  EXPECT_THROW( adam_step( w, g, s ), invariant_error );
}

TEST( Adam, MinimizesSquare )
{
  ParamSet w;
  w.add( "x", Eigen::MatrixXd::Constant( 1, 1, 1.0 ) );
  auto s = AdamState::for_params( w, 1e-2 );
  double prev = 1.0;
  for ( int k = 0; k < 100; ++k )
  {
    auto g = w.zeros_like();
    g[0]( 0, 0 ) = 2.0 * w[0]( 0, 0 );
    adam_step( w, g, s );
    EXPECT_LT( std::abs( w[0]( 0, 0 ) ), prev );
    prev = std::abs( w[0]( 0, 0 ) );
  }
}

TEST( Checkpoint, JsonRoundTrip )
{
  EncoderConfig enc;
  enc.embed_dim = 8;
  PretrainConfig cfg;
  auto ck = initial_checkpoint( enc, cfg );
  ck.epoch = 3;
  ck.encoder_opt.step = 17;
  auto const back = checkpoint_from_json( nlohmann::json::parse( checkpoint_to_json( ck ).dump() ) );
  EXPECT_EQ( back, ck );
  EXPECT_THROW( checkpoint_from_json( nlohmann::json{ { "format", "other" } } ), parse_error );
}

TEST( Trainer, CountsBatchesAndResumesExactly )
{
  auto const& c = small_corpus();
  EncoderConfig enc;
  enc.embed_dim = 8;
  PretrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 4;
  cfg.max_batches_per_epoch = 4;
  cfg.lr = 1e-3;

  std::vector<PretrainLogRow> straight;
  PretrainCallbacks cb;
  cb.on_batch = [&]( PretrainLogRow const& r ) { straight.push_back( r ); };
  auto const full = pretrain( c.bundles, c.manifest, cfg, initial_checkpoint( enc, cfg ), cb );
  ASSERT_EQ( straight.size(), 12u );
  EXPECT_EQ( straight[4].epoch, 1u );
  EXPECT_EQ( full.encoder_opt.step, 12u );

  auto one = cfg;
  one.epochs = 1;
  auto const mid = pretrain( c.bundles, c.manifest, one, initial_checkpoint( enc, cfg ) );
  auto const reloaded = checkpoint_from_json( nlohmann::json::parse( checkpoint_to_json( mid ).dump() ) );
  std::vector<PretrainLogRow> resumed;
  cb.on_batch = [&]( PretrainLogRow const& r ) { resumed.push_back( r ); };
  auto const end = pretrain( c.bundles, c.manifest, cfg, reloaded, cb );
  ASSERT_EQ( resumed.size(), 8u );
  for ( std::size_t i = 0; i < 8; ++i )
    EXPECT_EQ( resumed[i].loss.total(), straight[i + 4].loss.total() );
  EXPECT_EQ( end.model, full.model );
}

TEST( Trainer, BatchesNeverRepeatAScope )
{
  auto const& c = small_corpus();
  PretrainConfig cfg;
  cfg.batch_size = 3;
  for ( auto const& b : epoch_batches( c.manifest, 0, cfg ) )
  {
    std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
    for ( auto const& e : b )
    {
      EXPECT_EQ( c.manifest.designs[e.design].split, "train" );
      EXPECT_TRUE( seen.insert( { e.design, e.scope } ).second );
    }
  }
}

TEST( Trainer, EpochLossFalls )
{
  auto const& c = small_corpus();
  EncoderConfig enc;
  enc.embed_dim = 16;
  PretrainConfig cfg;
  cfg.epochs = 10;
  cfg.batch_size = 4;
  cfg.max_batches_per_epoch = 6;
  cfg.lr = 1e-3;
  std::vector<double> means;
  PretrainCallbacks cb;
  cb.on_epoch = [&]( Checkpoint const&, LossBreakdown const& m ) { means.push_back( m.total() ); };
  pretrain( c.bundles, c.manifest, cfg, initial_checkpoint( enc, cfg ), cb );
  ASSERT_EQ( means.size(), 10u );
  EXPECT_LT( means.back(), means.front() );
}
