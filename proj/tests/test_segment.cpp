#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include <pwrgraph/core/graph.hpp>
#include <pwrgraph/segment/dataset.hpp>
#include <pwrgraph/segment/sample.hpp>
#include <pwrgraph/segment/segment.hpp>

#include "fixtures.hpp"

using namespace pwrgraph;

namespace
{

Library const& lib() { return fixture_library(); }

/*! `top` instantiating `n_leaves` copies of an inverter chain of `chain` cells. */
std::string leaves_design( std::size_t n_leaves, std::size_t chain )
{
  std::ostringstream v;
  v << "module leaf (a, y);\n input a;\n output y;\n";
  for ( std::size_t i = 1; i < chain; ++i )
    v << " wire n" << i << ";\n";
  for ( std::size_t i = 0; i < chain; ++i )
    v << " INVX1 g" << i << " (.A(" << ( i == 0 ? "a" : "n" + std::to_string( i ) ) << "), .Y("
      << ( i + 1 == chain ? "y" : "n" + std::to_string( i + 1 ) ) << "));\n";
  v << "endmodule\n\nmodule top (a, y);\n input a;\n output y;\n";
  for ( std::size_t i = 0; i < n_leaves; ++i )
    v << " wire o" << i << ";\n";
  for ( std::size_t i = 0; i < n_leaves; ++i )
    v << " leaf u" << i << " (.a(" << ( i == 0 ? "a" : "o" + std::to_string( i - 1 ) ) << "), .y(o" << i << "));\n";
  v << " BUFX1 yb (.A(o" << n_leaves - 1 << "), .Y(y));\nendmodule\n";
  return v.str();
}

void expect_partition( Netlist const& nl, Segmentation const& s )
{
  std::vector<int> seen( nl.cells.size(), 0 );
  for ( auto const& sc : s )
    for ( auto id : sc.cells )
      ++seen[id];
  for ( std::size_t i = 0; i < seen.size(); ++i )
    EXPECT_EQ( seen[i], 1 ) << nl.cells[i].instance_path;
}

DesignBundle text_bundle( std::string const& id, std::string const& text, std::size_t cycles, std::uint64_t seed )
{
  auto g = parse_netlist( text, lib() );
  auto gp = equiv_transform( g, lib(), 5, seed );
  auto p = layout_transform( g, lib(), LayoutParams{} );
  auto const stim = gen_workload( g, cycles, seed );
  return make_bundle( id, std::move( g ), std::move( gp ), std::move( p ), lib(), stim, cycles );
}

} // namespace

TEST( Segment, FlatDesignIsOneScope )
{
  auto const nl = parse_netlist( "module top (a, y);\n input a;\n output y;\n wire n;\n INVX1 g0 (.A(a), .Y(n));\n INVX1 g1 (.A(n), .Y(y));\nendmodule\n",
                                 lib() );
  auto const s = segment( nl, 2 );
  ASSERT_EQ( s.size(), 1u );
  EXPECT_EQ( s[0].name, "top" );
  EXPECT_EQ( s[0].cells.size(), 2u );
}

TEST( Segment, FourLeavesGiveFourScopes )
{
  auto const nl = parse_netlist( leaves_design( 4, 25 ), lib() );
  auto const s = segment( nl, 20 );
  // the output buffer in top is glue
  ASSERT_EQ( s.size(), 5u );
  EXPECT_EQ( scope_names( s ), ( std::vector<std::string>{ "top.u0", "top.u1", "top.u2", "top.u3", glue_scope } ) );
  for ( std::size_t i = 0; i < 4; ++i )
    EXPECT_EQ( s[i].cells.size(), 25u );
  expect_partition( nl, s );
}

TEST( Segment, SmallLeavesFallBackToParent )
{
  auto const nl = parse_netlist( leaves_design( 4, 5 ), lib() );
  auto const s = segment( nl, 20 );
  ASSERT_EQ( s.size(), 1u );
  EXPECT_EQ( s[0].name, "top" );
  expect_partition( nl, s );
}

TEST( Segment, GeneratedDesignsArePartitioned )
{
  for ( std::uint64_t seed = 0; seed < 4; ++seed )
  {
    GenParams p;
    p.n_cells = 900;
    p.seed = seed;
    auto const g = gen_design( p, lib() );
    auto const s = segment( g, 20 );
    EXPECT_GE( s.size(), 3u );
    expect_partition( g, s );
    auto const pn = layout_transform( g, lib(), LayoutParams{} );
    auto const sp = assign_scopes( pn, scope_names( s ) );
    expect_partition( pn, sp );
    EXPECT_EQ( align_stages( s, sp ).size(), s.size() );
  }
}

TEST( Align, IdentityPairsByIndex )
{
  auto const nl = parse_netlist( leaves_design( 3, 25 ), lib() );
  auto const s = segment( nl, 20 );
  auto const pairs = align_stages( s, s );
  for ( std::size_t i = 0; i < pairs.size(); ++i )
    EXPECT_EQ( pairs[i], std::make_pair( i, i ) );
}

TEST( Align, MissingScopeIsAnError )
{
  auto const nl = parse_netlist( leaves_design( 3, 25 ), lib() );
  auto const s = segment( nl, 20 );
  auto other = s;
  other[1].cells.clear();
  EXPECT_THROW( align_stages( s, other ), invariant_error );
  other = s;
  other.push_back( { "top.extra", { 0 } } );
  EXPECT_THROW( align_stages( s, other ), invariant_error );
}

TEST( Annotate, FeatureRows )
{
  auto const nl = parse_netlist( "module top (a, b, y);\n input a;\n input b;\n output y;\n wire n;\n"
                                 " NAND2X1 g0 (.A(a), .B(b), .Y(n));\n INVX1 g1 (.A(n), .Y(y));\nendmodule\n",
                                 lib() );
  Stimulus s;
  s.inputs = { "a", "b" };
  s.bits = { { 0, 1, 1 }, { 0, 1, 0 } };
  s.n_cycles = 3;
  auto const w = simulate( nl, lib(), s, 3 );
  auto const g = build_graph( nl, lib(), "top" );
  auto const x = annotate( g, w, 1 );
  ASSERT_EQ( x.features.rows(), 2 );
  ASSERT_EQ( x.features.cols(), static_cast<Eigen::Index>( feature_width ) );
  for ( Eigen::Index r = 0; r < 2; ++r )
  {
    auto const& lc = lib().cell( nl.cells[static_cast<std::size_t>( r )].lib_cell );
    EXPECT_EQ( x.features.row( r ).head( node_type_count ).sum(), 1.0 );
    EXPECT_EQ( x.features( r, static_cast<Eigen::Index>( lc.node_type ) ), 1.0 );
    EXPECT_EQ( x.features( r, feature_internal_energy ), lc.internal_energy );
    EXPECT_EQ( x.features( r, feature_leakage ), lc.leakage );
  }
  // cycle 1: a=b=1, NAND falls, INV rises
  EXPECT_EQ( x.features( 0, feature_toggle ), 1.0 );
  EXPECT_EQ( x.features( 1, feature_toggle ), 1.0 );
  EXPECT_EQ( annotate( g, w, 2 ).features( 0, feature_toggle ), 1.0 );
  EXPECT_THROW( annotate( g, w, 3 ), argument_error );
}

TEST( Dataset, ManifestCountsAndSplit )
{
  std::vector<DesignBundle> bundles;
  bundles.push_back( text_bundle( "a", leaves_design( 3, 25 ), 10, 1 ) );
  bundles.push_back( text_bundle( "b", leaves_design( 3, 30 ), 10, 2 ) );
  // three leaves plus the glue buffer in top
  for ( auto const& b : bundles )
    ASSERT_EQ( b.n_scopes(), 4u );
  auto const m = assemble_dataset( bundles, { "a" }, { "b" }, 7 );
  EXPECT_EQ( m.samples.size(), 2u * 4u * 10u );
  EXPECT_EQ( m.designs_in( "train" ), std::vector<std::size_t>{ 0 } );
  EXPECT_EQ( m.designs_in( "test" ), std::vector<std::size_t>{ 1 } );
  EXPECT_THROW( assemble_dataset( bundles, { "a", "b" }, { "b" }, 7 ), argument_error );
  EXPECT_THROW( assemble_dataset( bundles, { "a" }, {}, 7 ), argument_error );
}

TEST( Dataset, ThreeScopeDesignsGiveSixtySamples )
{
  std::ostringstream v;
  // three leaves, no logic in top
  v << "module leaf (a, y);\n input a;\n output y;\n";
  for ( int i = 1; i < 25; ++i )
    v << " wire n" << i << ";\n";
  for ( int i = 0; i < 25; ++i )
    v << " INVX1 g" << i << " (.A(" << ( i == 0 ? "a" : "n" + std::to_string( i ) ) << "), .Y(" << ( i == 24 ? "y" : "n" + std::to_string( i + 1 ) )
      << "));\n";
  v << "endmodule\n\nmodule top (a, y0, y1, y2);\n input a;\n output y0;\n output y1;\n output y2;\n"
       " leaf u0 (.a(a), .y(y0));\n leaf u1 (.a(y0), .y(y1));\n leaf u2 (.a(y1), .y(y2));\nendmodule\n";
  std::vector<DesignBundle> bundles;
  bundles.push_back( text_bundle( "a", v.str(), 10, 1 ) );
  bundles.push_back( text_bundle( "b", v.str(), 10, 2 ) );
  ASSERT_EQ( bundles[0].n_scopes(), 3u );
  auto const m = assemble_dataset( bundles, { "a" }, { "b" }, 7 );
  EXPECT_EQ( m.samples.size(), 60u );
}

TEST( Dataset, JsonIsDeterministicAndRoundTrips )
{
  auto const c1 = fixtures::make_corpus( 3, 1, 400, 12, 5 );
  auto const c2 = fixtures::make_corpus( 3, 1, 400, 12, 5 );
  EXPECT_EQ( manifest_to_json( c1.manifest ).dump(), manifest_to_json( c2.manifest ).dump() );
  EXPECT_EQ( manifest_from_json( manifest_to_json( c1.manifest ) ), c1.manifest );
}

TEST( Dataset, ScopeLabelsSumToDesignLabel )
{
  auto const c = fixtures::make_corpus( 2, 1, 600, 30, 9 );
  for ( auto const& b : c.bundles )
    for ( std::size_t t = 0; t < b.n_cycles(); ++t )
    {
      GroupPower sum;
      for ( auto const& l : b.labels )
        for ( auto g : { PowerGroup::combinational, PowerGroup::register_, PowerGroup::clock_tree } )
          sum[g] += l[t][g];
      for ( auto g : { PowerGroup::combinational, PowerGroup::register_, PowerGroup::clock_tree } )
        EXPECT_NEAR( sum[g], b.design_labels[t][g], 1e-9 * std::max( 1e-12, b.design_labels[t][g] ) );
    }
}

TEST( Dataset, SamplesCarryAlignedStages )
{
  auto const c = fixtures::make_corpus( 2, 1, 500, 8, 3 );
  auto const& b = c.bundles[0];
  for ( std::size_t s = 0; s < b.n_scopes(); ++s )
  {
    auto const g = b.sample( Stage::G, s, 3 );
    auto const p = b.sample( Stage::P, s, 3 );
    EXPECT_EQ( g.scope(), p.scope() );
    EXPECT_TRUE( g.label.has_value() );
    EXPECT_EQ( g.features.rows(), static_cast<Eigen::Index>( b.g.scopes[s].cells.size() ) );
  }
}
