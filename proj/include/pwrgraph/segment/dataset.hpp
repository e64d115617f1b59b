#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "../core/graph.hpp"
#include "../forge/oracle.hpp"
#include "../sim/simulator.hpp"
#include "sample.hpp"
#include "segment.hpp"

namespace pwrgraph
{

/*! \brief One stage of a design: netlist, scopes aligned to stage G, graphs and simulated wave. */
struct StageData
{
  Netlist netlist;
  Segmentation scopes;
  std::vector<std::shared_ptr<DirectedCircuitGraph const>> graphs; ///< parallel to scopes
  WaveTable wave;
};

/*! \brief All stages of one design plus per-scope P-stage labels. */
struct DesignBundle
{
  std::string id;
  StageData g, gp, p;
  std::vector<std::vector<GroupPower>> labels; ///< labels[scope][cycle], oracle on stage P
  std::vector<GroupPower> design_labels;       ///< whole-design oracle on stage P, per cycle

  std::size_t n_cycles() const { return g.wave.n_cycles; }
  std::size_t n_scopes() const { return g.scopes.size(); }

  SubModuleSample sample( Stage stage, std::size_t scope, std::size_t cycle ) const
  {
    auto const& sd = stage == Stage::G ? g : stage == Stage::G_PLUS ? gp : p;
    auto s = annotate( sd.graphs.at( scope ), sd.wave, cycle );
    if ( stage == Stage::G )
      s.label = labels.at( scope ).at( cycle );
    return s;
  }
};

/*! \brief Segment stage G, carry its scopes over to G_PLUS and P, simulate all three and label stage P. */
inline DesignBundle make_bundle( std::string id, Netlist g, Netlist gp, Netlist p, Library const& lib, Stimulus const& stim,
                                 std::size_t n_cycles, std::size_t min_cells = 20 )
{
  if ( g.stage != Stage::G || gp.stage != Stage::G_PLUS || p.stage != Stage::P )
    throw argument_error( "make_bundle: design '" + id + "' is missing a stage" );
  DesignBundle b;
  b.id = std::move( id );
  b.g.scopes = segment( g, min_cells );
  auto const names = scope_names( b.g.scopes );
  b.gp.scopes = assign_scopes( gp, names );
  b.p.scopes = assign_scopes( p, names );
  align_stages( b.g.scopes, b.gp.scopes );
  align_stages( b.g.scopes, b.p.scopes );
  b.g.netlist = std::move( g );
  b.gp.netlist = std::move( gp );
  b.p.netlist = std::move( p );
  for ( auto* sd : { &b.g, &b.gp, &b.p } )
  {
    Connectivity const conn( sd->netlist );
    for ( auto const& s : sd->scopes )
      sd->graphs.push_back( std::make_shared<DirectedCircuitGraph const>( build_graph( sd->netlist, lib, conn, s.name, s.cells ) ) );
    sd->wave = simulate( sd->netlist, lib, stim, n_cycles );
  }
  PowerOracle const oracle( b.p.netlist, lib );
  for ( auto const& s : b.p.scopes )
    b.labels.push_back( oracle.series( b.p.wave, s.cells ) );
  b.design_labels = oracle.series( b.p.wave );
  return b;
}

/*! \brief Index of aligned (G, G_PLUS, P, label) samples and the design split. */
struct DatasetManifest
{
  struct Design
  {
    std::string id;
    std::string split; ///< "train" or "test"
    std::size_t n_cycles{ 0 };
    std::vector<std::string> scopes;
    std::map<std::string, std::string> files; ///< artifact kind -> path

    bool operator==( Design const& ) const = default;
  };
  struct Entry
  {
    std::uint32_t design, scope, cycle;

    bool operator==( Entry const& ) const = default;
  };

  std::uint64_t seed{ 0 };
  std::vector<Design> designs;
  std::vector<Entry> samples; ///< one aligned quadruple per (design, scope, cycle)

  std::vector<std::size_t> designs_in( std::string const& split ) const
  {
    std::vector<std::size_t> out;
    for ( std::size_t i = 0; i < designs.size(); ++i )
      if ( designs[i].split == split )
        out.push_back( i );
    return out;
  }

  bool operator==( DatasetManifest const& ) const = default;
};

/*! \brief Build the manifest over `bundles`; every design must be listed in exactly one of train/test. */
inline DatasetManifest assemble_dataset( std::vector<DesignBundle> const& bundles, std::vector<std::string> const& train,
                                         std::vector<std::string> const& test, std::uint64_t seed )
{
  std::set<std::string> tr( train.begin(), train.end() ), te( test.begin(), test.end() );
  for ( auto const& t : tr )
    if ( te.count( t ) )
      throw argument_error( "design '" + t + "' appears in both the train and the test split" );
  DatasetManifest m;
  m.seed = seed;
  for ( std::size_t d = 0; d < bundles.size(); ++d )
  {
    auto const& b = bundles[d];
    if ( !tr.count( b.id ) && !te.count( b.id ) )
      throw argument_error( "design '" + b.id + "' is in neither split" );
    if ( b.gp.netlist.cells.empty() || b.p.netlist.cells.empty() )
      throw argument_error( "design '" + b.id + "' is missing a stage" );
    auto const n = b.g.wave.n_cycles;
    if ( b.gp.wave.n_cycles != n || b.p.wave.n_cycles != n || b.labels.size() != b.n_scopes() )
      throw invariant_error( "design '" + b.id + "': cycle counts differ between stages" );
    align_stages( b.g.scopes, b.gp.scopes );
    align_stages( b.g.scopes, b.p.scopes );
    DatasetManifest::Design md;
    md.id = b.id;
    md.split = tr.count( b.id ) ? "train" : "test";
    md.n_cycles = n;
    md.scopes = scope_names( b.g.scopes );
    m.designs.push_back( std::move( md ) );
    for ( std::uint32_t s = 0; s < b.n_scopes(); ++s )
      for ( std::uint32_t c = 0; c < n; ++c )
        m.samples.push_back( { static_cast<std::uint32_t>( d ), s, c } );
  }
  return m;
}

inline nlohmann::json manifest_to_json( DatasetManifest const& m )
{
  nlohmann::json designs = nlohmann::json::array();
  for ( auto const& d : m.designs )
    designs.push_back( { { "id", d.id }, { "split", d.split }, { "n_cycles", d.n_cycles }, { "scopes", d.scopes }, { "files", d.files } } );
  nlohmann::json samples = nlohmann::json::array();
  for ( auto const& e : m.samples )
    samples.push_back( { e.design, e.scope, e.cycle } );
  return { { "format", "pwrgraph-manifest" }, { "version", 1 }, { "seed", m.seed }, { "designs", std::move( designs ) },
           { "samples", std::move( samples ) } };
}

inline DatasetManifest manifest_from_json( nlohmann::json const& j )
{
  if ( j.value( "format", "" ) != "pwrgraph-manifest" || j.value( "version", 0 ) != 1 )
    throw parse_error( "not a version-1 dataset manifest", 1, 1 );
  DatasetManifest m;
  m.seed = j.at( "seed" ).get<std::uint64_t>();
  for ( auto const& d : j.at( "designs" ) )
    m.designs.push_back( { d.at( "id" ).get<std::string>(), d.at( "split" ).get<std::string>(), d.at( "n_cycles" ).get<std::size_t>(),
                           d.at( "scopes" ).get<std::vector<std::string>>(),
                           d.at( "files" ).get<std::map<std::string, std::string>>() } );
  for ( auto const& e : j.at( "samples" ) )
    m.samples.push_back( { e.at( 0 ).get<std::uint32_t>(), e.at( 1 ).get<std::uint32_t>(), e.at( 2 ).get<std::uint32_t>() } );
  return m;
}

} // namespace pwrgraph
