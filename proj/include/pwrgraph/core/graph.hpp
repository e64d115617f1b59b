#pragma once

#include <algorithm>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "types.hpp"

namespace pwrgraph
{

/*! \brief Directed graph over the cells of one sub-module: node = cell, edge = driver -> sink wire. */
struct DirectedCircuitGraph
{
  std::string scope;
  Stage stage{ Stage::G };
  std::vector<CellId> cells; ///< node i represents netlist cell cells[i]
  std::vector<NodeType> node_type;
  std::vector<double> internal_energy;
  std::vector<double> leakage;
  std::vector<double> input_cap_sum;
  std::vector<NetId> output_net;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges; ///< (driver node, sink node), sorted, unique
  std::vector<NetId> boundary_inputs; ///< nets read inside the scope but driven outside it

  std::size_t size() const { return cells.size(); }

  bool operator==( DirectedCircuitGraph const& ) const = default;
};

/*! \brief Build the graph of an explicit cell set (sorted by id), e.g. a segmentation scope. */
inline DirectedCircuitGraph build_graph( Netlist const& nl, Library const& lib, Connectivity const& conn,
                                         std::string scope, std::vector<CellId> const& members )
{
  if ( members.empty() )
    throw argument_error( "scope '" + scope + "' contains no cells" );
  DirectedCircuitGraph g;
  g.scope = std::move( scope );
  g.stage = nl.stage;
  g.cells = members;
  std::unordered_map<CellId, std::uint32_t> node_of;
  node_of.reserve( members.size() );
  for ( std::uint32_t i = 0; i < members.size(); ++i )
  {
    auto const& c = nl.cells[members[i]];
    auto const& lc = lib.cell( c.lib_cell );
    node_of.emplace( c.id, i );
    g.node_type.push_back( lc.node_type );
    g.internal_energy.push_back( lc.internal_energy );
    g.leakage.push_back( lc.leakage );
    g.input_cap_sum.push_back( lc.input_cap * static_cast<double>( c.input_nets.size() + ( c.clock_net ? 1 : 0 ) ) );
    g.output_net.push_back( c.output_net );
  }
  std::vector<NetId> boundary;
  for ( std::uint32_t j = 0; j < members.size(); ++j )
  {
    auto const& c = nl.cells[members[j]];
    auto visit = [&]( NetId n ) {
      auto const d = conn.driver[n];
      if ( d )
        if ( auto it = node_of.find( *d ); it != node_of.end() )
        {
          g.edges.emplace_back( it->second, j );
          return;
        }
      boundary.push_back( n );
    };
    for ( auto n : c.input_nets )
      visit( n );
    if ( c.clock_net )
      visit( *c.clock_net );
  }
  std::sort( g.edges.begin(), g.edges.end() );
  g.edges.erase( std::unique( g.edges.begin(), g.edges.end() ), g.edges.end() );
  std::sort( boundary.begin(), boundary.end() );
  boundary.erase( std::unique( boundary.begin(), boundary.end() ), boundary.end() );
  g.boundary_inputs = std::move( boundary );
  return g;
}

/*! \brief Graph over every cell whose instance path lies under `scope`. */
inline DirectedCircuitGraph build_graph( Netlist const& nl, Library const& lib, std::string const& scope )
{
  if ( std::find( nl.hierarchy.begin(), nl.hierarchy.end(), scope ) == nl.hierarchy.end() )
    throw argument_error( "unknown scope '" + scope + "'" );
  std::vector<CellId> members;
  for ( auto const& c : nl.cells )
    if ( path_under( c.instance_path, scope ) )
      members.push_back( c.id );
  Connectivity const conn( nl );
  return build_graph( nl, lib, conn, scope, members );
}

/*! \brief Canonical interchange record of one sub-module graph. */
inline nlohmann::json graph_to_json( DirectedCircuitGraph const& g, Netlist const& nl )
{
  nlohmann::json nodes = nlohmann::json::array();
  for ( std::size_t i = 0; i < g.size(); ++i )
    nodes.push_back( { { "id", i },
                       { "cell", nl.cells[g.cells[i]].instance_path },
                       { "type", to_string( g.node_type[i] ) },
                       { "internal_energy", g.internal_energy[i] },
                       { "leakage", g.leakage[i] },
                       { "input_cap", g.input_cap_sum[i] },
                       { "output_net", nl.nets[g.output_net[i]].name } } );
  nlohmann::json edges = nlohmann::json::array();
  for ( auto const& [a, b] : g.edges )
    edges.push_back( { a, b } );
  return { { "scope", g.scope }, { "stage", to_string( g.stage ) }, { "nodes", std::move( nodes ) },
           { "edges", std::move( edges ) } };
}

} // namespace pwrgraph
