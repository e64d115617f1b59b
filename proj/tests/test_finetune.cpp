#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include <pwrgraph/core/graph.hpp>
#include <pwrgraph/finetune/features.hpp>
#include <pwrgraph/finetune/gbrt.hpp>
#include <pwrgraph/finetune/predictor.hpp>
#include <pwrgraph/nn/encoder.hpp>

#include "fixtures.hpp"

using namespace pwrgraph;

namespace
{

Library const& lib() { return fixture_library(); }

struct XorData
{
  std::vector<std::vector<double>> rows{ { 0, 0 }, { 0, 1 }, { 1, 0 }, { 1, 1 } };
  std::vector<double> y{ 0, 1, 1, 0 };
};

GbrtModel fit_xor()
{
  XorData d;
  GbrtConfig cfg;
  cfg.n_estimators = 200;
  cfg.max_depth = 2;
  return gbrt_fit( d.rows, d.y, cfg );
}

/*! A model with no trees whose base is `c`. */
GbrtModel constant_model( double c, std::size_t width )
{
  GbrtConfig cfg;
  cfg.n_estimators = 0;
  std::vector<std::vector<double>> rows( 3, std::vector<double>( width, 0.0 ) );
  for ( std::size_t i = 0; i < 3; ++i )
    rows[i][0] = static_cast<double>( i );
  return gbrt_fit( rows, { c, c, c }, cfg );
}

} // namespace

TEST( GroupFeatures, TwoCombCells )
{
  auto l = lib();
  l.cells.at( "INVX1" ).internal_energy = 2.0;
  l.cells.at( "BUFX1" ).internal_energy = 3.0;
  auto const nl = parse_netlist( "module top (a, b, y, z);\n input a;\n input b;\n output y;\n output z;\n"
                                 " INVX1 g0 (.A(a), .Y(y));\n BUFX1 g1 (.A(b), .Y(z));\nendmodule\n",
                                 l );
  Stimulus s;
  s.inputs = { "a", "b" };
  s.bits = { { 0, 1 }, { 0, 0 } };
  s.n_cycles = 2;
  auto const w = simulate( nl, l, s, 2 );
  auto const g = std::make_shared<DirectedCircuitGraph const>( build_graph( nl, l, "top" ) );
  auto const f = extract_group_features( annotate( g, w, 1 ), Eigen::RowVectorXd::Zero( 8 ), nl, l );
  EXPECT_EQ( f.n_comb, 2.0 );
  EXPECT_DOUBLE_EQ( f.i_comb, 2.0 );
  EXPECT_EQ( f.n_reg, 0.0 );
  EXPECT_EQ( f.comb_row().size(), 11u );
  EXPECT_EQ( f.clock_tree_row().size(), 8u );
}

TEST( GroupFeatures, QuietCycleHasNoActivity )
{
  auto const c = fixtures::make_corpus( 1, 0, 300, 5, 4 );
  auto const& b = c.bundles[0];
  auto w = b.g.wave;
  std::fill( w.toggles.begin(), w.toggles.end(), 0 );
  auto const loads = net_load_caps( b.g.netlist, lib() );
  for ( auto const& graph : b.g.graphs )
  {
    auto const f = extract_group_features( annotate( graph, w, 2 ), Eigen::RowVectorXd::Zero( 8 ), loads );
    EXPECT_EQ( f.i_comb, 0.0 );
    EXPECT_EQ( f.i_reg, 0.0 );
    EXPECT_EQ( f.c_comb, 0.0 );
    EXPECT_EQ( f.c_reg, 0.0 );
  }
}

TEST( GroupFeatures, MatchIndependentRecomputation )
{
  auto const c = fixtures::make_corpus( 2, 0, 500, 20, 6 );
  std::mt19937_64 rng( 3 );
  std::size_t checked = 0;
  for ( auto const& b : c.bundles )
  {
    auto const& nl = b.g.netlist;
    auto const loads = net_load_caps( nl, lib() );
    for ( std::size_t k = 0; k < 500; ++k )
    {
      auto const s = rng() % b.n_scopes();
      auto const cyc = rng() % b.n_cycles();
      auto const f = extract_group_features( b.sample( Stage::G, s, cyc ), Eigen::RowVectorXd::Zero( 4 ), loads );
      double n[2] = { 0, 0 }, e[2] = { 0, 0 }, cap[2] = { 0, 0 };
      for ( auto id : b.g.scopes[s].cells )
      {
        auto const& cell = nl.cells[id];
        auto const& lc = lib().cell( cell.lib_cell );
        auto const grp = group_of( lc.node_type );
        if ( grp == PowerGroup::clock_tree )
          continue;
        int const gi = grp == PowerGroup::combinational ? 0 : 1;
        double const t = b.g.wave.toggle( cell.output_net, cyc );
        double load = nl.nets[cell.output_net].wire_cap;
        for ( auto const& other : nl.cells )
        {
          auto const& olc = lib().cell( other.lib_cell );
          for ( auto in : other.input_nets )
            load += in == cell.output_net ? olc.input_cap : 0.0;
          if ( other.clock_net == cell.output_net )
            load += olc.input_cap;
        }
        n[gi] += 1;
        e[gi] += lc.internal_energy * t;
        cap[gi] += load * t;
      }
      EXPECT_EQ( f.n_comb, n[0] );
      EXPECT_EQ( f.n_reg, n[1] );
      EXPECT_NEAR( f.i_comb, e[0], 1e-12 );
      EXPECT_NEAR( f.i_reg, e[1], 1e-12 );
      EXPECT_NEAR( f.c_comb, cap[0], 1e-9 );
      EXPECT_NEAR( f.c_reg, cap[1], 1e-9 );
      ++checked;
    }
  }
  EXPECT_EQ( checked, 1000u );
}

TEST( Gbrt, ConstantTarget )
{
  std::vector<std::vector<double>> rows{ { 1, 2 }, { 3, 4 }, { 5, 0 } };
  auto const m = gbrt_fit( rows, { 2.5, 2.5, 2.5 }, GbrtConfig{} );
  for ( auto const& r : rows )
    EXPECT_EQ( gbrt_predict( m, r ), 2.5 );
  EXPECT_EQ( gbrt_predict( m, { 100, -7 } ), 2.5 );
}

TEST( Gbrt, FitsXor )
{
  auto const m = fit_xor();
  EXPECT_LT( m.train_mse.back(), 1e-3 );
  XorData d;
  for ( std::size_t i = 0; i < 4; ++i )
    EXPECT_NEAR( gbrt_predict( m, d.rows[i] ), d.y[i], 0.05 );
  for ( auto const& t : m.trees )
    EXPECT_LE( t.depth(), 2u );
}

TEST( Gbrt, TrainingMseNeverRises )
{
  std::mt19937_64 rng( 1 );
  std::uniform_real_distribution<double> u( 0, 1 );
  std::vector<std::vector<double>> rows;
  std::vector<double> y;
  for ( int i = 0; i < 200; ++i )
  {
    rows.push_back( { u( rng ), u( rng ), u( rng ) } );
    y.push_back( std::sin( 6 * rows.back()[0] ) + rows.back()[1] * rows.back()[2] + 0.1 * u( rng ) );
  }
  GbrtConfig cfg;
  cfg.n_estimators = 60;
  cfg.max_depth = 3;
  auto const m = gbrt_fit( rows, y, cfg );
  ASSERT_EQ( m.train_mse.size(), 61u );
  for ( std::size_t k = 1; k < m.train_mse.size(); ++k )
    EXPECT_LE( m.train_mse[k], m.train_mse[k - 1] + 1e-15 );
}

TEST( Gbrt, RowOrderDoesNotMatter )
{
  XorData d;
  GbrtConfig cfg;
  cfg.n_estimators = 50;
  cfg.max_depth = 2;
  auto const a = gbrt_fit( d.rows, d.y, cfg );
  std::vector<std::size_t> perm{ 2, 0, 3, 1 };
  std::vector<std::vector<double>> rows;
  std::vector<double> y;
  for ( auto i : perm )
  {
    rows.push_back( d.rows[i] );
    y.push_back( d.y[i] );
  }
  EXPECT_EQ( gbrt_to_json( gbrt_fit( rows, y, cfg ) ), gbrt_to_json( a ) );
}

TEST( Gbrt, ZeroTreesPredictMean )
{
  auto const m = constant_model( 0.0, 2 );
  std::vector<std::vector<double>> rows{ { 0, 1 }, { 1, 1 }, { 2, 0 } };
  GbrtConfig cfg;
  cfg.n_estimators = 0;
  auto const mean = gbrt_fit( rows, { 1.0, 2.0, 6.0 }, cfg );
  EXPECT_DOUBLE_EQ( gbrt_predict( mean, { 9, 9 } ), 3.0 );
  EXPECT_EQ( gbrt_predict( m, { 0, 0 } ), 0.0 );
}

TEST( Gbrt, ErrorsAndWarnings )
{
  XorData d;
  EXPECT_THROW( gbrt_fit( { { 1.0 } }, { 1.0 }, GbrtConfig{} ), argument_error );
  EXPECT_THROW( gbrt_fit( { { 1.0 }, { 1.0, 2.0 } }, { 1.0, 2.0 }, GbrtConfig{} ), argument_error );
  EXPECT_THROW( gbrt_fit( d.rows, { 0, 1, std::nan( "" ), 0 }, GbrtConfig{} ), argument_error );
  EXPECT_THROW( gbrt_predict( fit_xor(), { 1.0 } ), argument_error );
  auto const flat = gbrt_fit( { { 1, 1 }, { 1, 1 }, { 1, 1 } }, { 1.0, 2.0, 3.0 }, GbrtConfig{} );
  EXPECT_FALSE( flat.warnings.empty() );
  EXPECT_DOUBLE_EQ( gbrt_predict( flat, { 1, 1 } ), 2.0 );
}

TEST( Gbrt, PredictionsAreNonNegative )
{
  auto const m = gbrt_fit( { { 0 }, { 1 }, { 2 } }, { -5.0, -5.0, -5.0 }, GbrtConfig{} );
  EXPECT_EQ( gbrt_predict( m, { 1 } ), 0.0 );
}

TEST( Gbrt, JsonRoundTrip )
{
  auto const m = fit_xor();
  auto const back = gbrt_from_json( nlohmann::json::parse( gbrt_to_json( m ).dump() ) );
  EXPECT_EQ( gbrt_to_json( back ), gbrt_to_json( m ) );
  XorData d;
  for ( auto const& r : d.rows )
    EXPECT_EQ( gbrt_predict( back, r ), gbrt_predict( m, r ) );
}

TEST( Predictor, ConstantModelsAddUp )
{
  GroupModels gm{ constant_model( 1e-6, 4 ), constant_model( 2e-6, 7 ), constant_model( 3e-6, 7 ) };
  GroupFeatures f;
  f.embedding = Eigen::RowVectorXd::Zero( 4 );
  auto const g = predict_groups( gm, f );
  EXPECT_EQ( g.clock_tree, 1e-6 );
  EXPECT_EQ( g.combinational, 2e-6 );
  EXPECT_EQ( g.register_, 3e-6 );
  EXPECT_NEAR( predict_total( gm, f ), 6e-6, 1e-18 );
}

TEST( Predictor, ClockTreeModelTakesOnlyTheEmbedding )
{
  GroupModels gm{ constant_model( 1e-6, 7 ), constant_model( 2e-6, 7 ), constant_model( 3e-6, 7 ) };
  GroupFeatures f;
  f.embedding = Eigen::RowVectorXd::Zero( 4 );
  EXPECT_THROW( predict_groups( gm, f ), argument_error );
}

TEST( Predictor, TotalIsExactSumOfGroups )
{
  auto const c = fixtures::make_corpus( 3, 1, 300, 20, 8 );
  EncoderConfig ec;
  ec.embed_dim = 8;
  auto const table = build_feature_table( c.bundles, c.manifest, init_weights( ec ), lib() );
  GbrtConfig cfg;
  cfg.n_estimators = 20;
  auto const r = finetune_all( table, c.manifest, cfg );
  ASSERT_EQ( r.log.size(), 3u );
  auto const preds = predict_table( r.models, table );
  ASSERT_EQ( preds.size(), table.rows.size() );
  for ( std::size_t i = 0; i < std::min<std::size_t>( 1000, preds.size() ); ++i )
  {
    auto const g = predict_groups( r.models, table.rows[i].features );
    EXPECT_EQ( preds[i].total(), g.combinational + g.register_ + g.clock_tree );
    EXPECT_EQ( predict_total( r.models, table.rows[i].features ), preds[i].total() );
  }

  auto const again = finetune_all( table, c.manifest, cfg );
  EXPECT_EQ( group_models_to_json( again.models ), group_models_to_json( r.models ) );
  auto const back = group_models_from_json( nlohmann::json::parse( group_models_to_json( r.models ).dump() ) );
  EXPECT_EQ( group_models_to_json( back ), group_models_to_json( r.models ) );
}
