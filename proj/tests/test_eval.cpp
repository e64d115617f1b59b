#include <gtest/gtest.h>

#include <random>

#include <pwrgraph/eval/report.hpp>
#include <pwrgraph/forge/layout.hpp>

#include "fixtures.hpp"

using namespace pwrgraph;

namespace
{

Library const& lib() { return fixture_library(); }

} // namespace

TEST( Mape, HandValues )
{
  EXPECT_EQ( mape( { 1, 2, 3 }, { 1, 2, 3 } ).percent, 0.0 );
  EXPECT_NEAR( mape( { 100 }, { 90 } ).percent, 10.0, 1e-12 );
  EXPECT_NEAR( mape( { 50, 200 }, { 40, 220 } ).percent, 15.0, 1e-12 );
}

TEST( Mape, ScaleInvariant )
{
  std::vector<double> y{ 3, 5, 8 }, p{ 2.5, 6, 7 }, ky, kp;
  for ( std::size_t i = 0; i < 3; ++i )
  {
    ky.push_back( 1e-6 * y[i] );
    kp.push_back( 1e-6 * p[i] );
  }
  EXPECT_NEAR( mape( y, p ).percent, mape( ky, kp ).percent, 1e-9 );
}

TEST( Mape, ZeroLabelsExcluded )
{
  auto const r = mape( { 0, 100, 0 }, { 5, 90, 1 } );
  EXPECT_EQ( r.excluded, 2u );
  EXPECT_EQ( r.used, 1u );
  EXPECT_NEAR( r.percent, 10.0, 1e-12 );
  EXPECT_THROW( mape( { 0, 0 }, { 1, 1 } ), argument_error );
  EXPECT_THROW( mape( { 1 }, { 1, 1 } ), argument_error );
}

TEST( Baseline, MissesTheClockTree )
{
  auto const c = fixtures::make_corpus( 2, 1, 600, 40, 12 );
  for ( auto const& b : c.bundles )
  {
    auto const base = baseline_prelayout( b.g.netlist, lib(), b.g.wave );
    auto const m = group_mape( b.design_labels, base );
    EXPECT_NEAR( m.clock_tree.percent, 100.0, 2.0 ) << b.id;
    EXPECT_GT( m.total.percent, 0.0 );
  }
}

TEST( Baseline, IdentityStageGivesZeroError )
{
  auto const c = fixtures::make_corpus( 1, 0, 400, 20, 13 );
  auto const& b = c.bundles[0];
  auto const base = baseline_prelayout( b.g.netlist, lib(), b.g.wave );
  auto const label = PowerOracle( b.g.netlist, lib() ).series( b.g.wave );
  EXPECT_EQ( group_mape( label, base ).total.percent, 0.0 );
  EXPECT_THROW( baseline_prelayout( b.p.netlist, lib(), b.p.wave ), argument_error );
}

TEST( Baseline, CombinationalBelowLabelWhenWiresDominate )
{
  auto const c = fixtures::make_corpus( 1, 0, 500, 30, 14 );
  auto const& b = c.bundles[0];
  // fanout buffering only, no restructuring: the layout adds load and buffers
  LayoutParams lp;
  lp.rewrites = 0;
  lp.wire_cap_per_fanout = 20.0;
  auto const p = layout_transform( b.g.netlist, lib(), lp );
  auto const label = PowerOracle( p, lib() ).series( simulate( p, lib(), gen_workload( b.g.netlist, 30, 14 ), 30 ) );
  auto const base = baseline_prelayout( b.g.netlist, lib(), simulate( b.g.netlist, lib(), gen_workload( b.g.netlist, 30, 14 ), 30 ) );
  for ( std::size_t t = 0; t < 30; ++t )
    EXPECT_LE( base[t].combinational, label[t].combinational ) << t;
}

TEST( Components, SumsMatchDesign )
{
  std::vector<std::string> scopes{ "top.a.x", "top.a.y", "top.b", "top.c.z" };
  std::mt19937_64 rng( 2 );
  std::uniform_real_distribution<double> u( 1, 2 );
  std::vector<std::vector<double>> pred( 4, std::vector<double>( 6 ) ), lab = pred;
  for ( std::size_t s = 0; s < 4; ++s )
    for ( std::size_t c = 0; c < 6; ++c )
    {
      pred[s][c] = u( rng );
      lab[s][c] = u( rng );
    }
  auto const whole = component_report( scopes, pred, lab, { "top" } );
  ASSERT_EQ( whole.size(), 1u );
  EXPECT_EQ( whole[0].scopes, 4u );
  double mean_lab = 0, mean_pred = 0;
  std::vector<double> dl( 6, 0.0 ), dp( 6, 0.0 );
  for ( std::size_t s = 0; s < 4; ++s )
    for ( std::size_t c = 0; c < 6; ++c )
    {
      mean_lab += lab[s][c] / 6;
      mean_pred += pred[s][c] / 6;
      dl[c] += lab[s][c];
      dp[c] += pred[s][c];
    }
  EXPECT_NEAR( whole[0].label_w, mean_lab, 1e-9 * mean_lab );
  EXPECT_NEAR( whole[0].pred_w, mean_pred, 1e-9 * mean_pred );
  EXPECT_NEAR( whole[0].error.percent, mape( dl, dp ).percent, 1e-9 );

  auto const prefixes = top_level_components( scopes, "top" );
  EXPECT_EQ( prefixes, ( std::vector<std::string>{ "top.a", "top.b", "top.c" } ) );
  auto const parts = component_report( scopes, pred, lab, prefixes );
  double sum_lab = 0, sum_pred = 0;
  for ( auto const& r : parts )
  {
    sum_lab += r.label_w;
    sum_pred += r.pred_w;
  }
  EXPECT_NEAR( sum_lab, mean_lab, 1e-9 * mean_lab );
  EXPECT_NEAR( sum_pred, mean_pred, 1e-9 * mean_pred );
  EXPECT_EQ( parts[0].scopes, 2u );
  EXPECT_THROW( component_report( scopes, pred, lab, { "top.q" } ), argument_error );
}

TEST( Report, MetricsAndCsv )
{
  DesignTrace t;
  t.design = "d4";
  for ( int c = 0; c < 3; ++c )
  {
    GroupPower l, p, b;
    l.combinational = 2e-6;
    l.register_ = 1e-6;
    l.clock_tree = 1e-6;
    p = l;
    p.clock_tree = 0.9e-6;
    b = l;
    b.clock_tree = 0.0;
    t.label.push_back( l );
    t.pred.push_back( p );
    t.baseline.push_back( b );
  }
  auto const r = make_eval_report( { t } );
  EXPECT_NEAR( r.model.clock_tree.percent, 10.0, 1e-9 );
  EXPECT_NEAR( r.baseline.clock_tree.percent, 100.0, 1e-9 );
  EXPECT_NEAR( r.model.total.percent, 2.5, 1e-9 );
  auto const j = metrics_to_json( r );
  EXPECT_FALSE( j.dump().find( "_s\"" ) != std::string::npos );
  auto const csv = trace_csv( r );
  EXPECT_EQ( csv.substr( 0, csv.find( '\n' ) ), "design,cycle,group,label_w,pred_w,baseline_w" );
  EXPECT_THROW( make_eval_report( {} ), argument_error );
  t.pred.pop_back();
  EXPECT_THROW( make_eval_report( { t } ), argument_error );
}

TEST( Runtime, SpeedupRatio )
{
  RuntimeReport r;
  r.preprocess_s = 1.0;
  r.inference_s = 1.0;
  r.layout_s = 4.0;
  r.simulate_s = 3.0;
  r.label_s = 3.0;
  EXPECT_DOUBLE_EQ( r.speedup(), 5.0 );
  EXPECT_DOUBLE_EQ( runtime_to_json( r ).at( "oracle_s" ).get<double>(), 10.0 );
  EXPECT_EQ( RuntimeReport{}.speedup(), 0.0 );
}
