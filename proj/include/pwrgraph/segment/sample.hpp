#pragma once

#include <memory>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "../core/graph.hpp"
#include "../forge/oracle.hpp"
#include "../sim/simulator.hpp"

namespace pwrgraph
{

/*! Feature layout of a node row. */
inline constexpr std::size_t feature_type_begin = 0;
inline constexpr std::size_t feature_toggle = node_type_count;             // 18
inline constexpr std::size_t feature_internal_energy = node_type_count + 1; // 19, pJ
inline constexpr std::size_t feature_leakage = node_type_count + 2;         // 20, nW
inline constexpr std::size_t feature_width = node_type_count + 3;           // 21

/*! \brief One (sub-module graph, cycle) unit with its node features. */
struct SubModuleSample
{
  std::shared_ptr<DirectedCircuitGraph const> graph;
  Stage stage{ Stage::G };
  std::size_t cycle{ 0 };
  Eigen::MatrixXd features; ///< graph->size() x feature_width
  std::optional<GroupPower> label;

  std::string const& scope() const { return graph->scope; }
};

/*! \brief Node features of `graph` at one cycle: [one-hot type | output toggle | internal energy | leakage]. */
inline SubModuleSample annotate( std::shared_ptr<DirectedCircuitGraph const> graph, WaveTable const& wave, std::size_t cycle )
{
  if ( !graph )
    throw argument_error( "annotate: null graph" );
  if ( cycle >= wave.n_cycles )
    throw argument_error( "annotate: cycle " + std::to_string( cycle ) + " not covered by the wave table" );
  SubModuleSample s;
  s.stage = graph->stage;
  s.cycle = cycle;
  auto const n = graph->size();
  s.features = Eigen::MatrixXd::Zero( static_cast<Eigen::Index>( n ), feature_width );
  for ( std::size_t i = 0; i < n; ++i )
  {
    auto const net = graph->output_net[i];
    if ( net >= wave.n_nets )
      throw argument_error( "annotate: net " + std::to_string( net ) + " missing from the wave table" );
    auto const r = static_cast<Eigen::Index>( i );
    s.features( r, static_cast<Eigen::Index>( graph->node_type[i] ) ) = 1.0;
    s.features( r, feature_toggle ) = wave.toggle( net, cycle );
    s.features( r, feature_internal_energy ) = graph->internal_energy[i];
    s.features( r, feature_leakage ) = graph->leakage[i];
  }
  s.graph = std::move( graph );
  return s;
}

inline SubModuleSample annotate( DirectedCircuitGraph const& graph, WaveTable const& wave, std::size_t cycle )
{
  return annotate( std::make_shared<DirectedCircuitGraph const>( graph ), wave, cycle );
}

} // namespace pwrgraph
