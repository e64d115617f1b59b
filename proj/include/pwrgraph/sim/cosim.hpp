#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "simulator.hpp"

namespace pwrgraph
{

struct EquivalenceReport
{
  bool equivalent{ true };
  std::size_t cycles_checked{ 0 };
  std::size_t signals_compared{ 0 };
  std::optional<std::size_t> mismatch_cycle;
  std::string mismatch_net; ///< primary output name, or register instance path
};

/*! \brief Random-vector co-simulation of two netlists with identical primary ports.
 *
 * Primary outputs are always compared. When neither side is a post-layout
 * netlist, register outputs matched by instance path are compared as well.
 */
inline EquivalenceReport cosim_equiv( Netlist const& a, Netlist const& b, Library const& lib, std::size_t n_vectors,
                                      std::uint64_t seed )
{
  auto names = []( Netlist const& nl, std::vector<NetId> const& ids ) {
    std::set<std::string> s;
    for ( auto n : ids )
      s.insert( nl.nets[n].name );
    return s;
  };
  if ( names( a, a.primary_inputs ) != names( b, b.primary_inputs ) ||
       names( a, a.primary_outputs ) != names( b, b.primary_outputs ) )
    throw argument_error( "cosim_equiv: primary port names differ" );
  if ( a.clock_root.has_value() != b.clock_root.has_value() ||
       ( a.clock_root && a.nets[*a.clock_root].name != b.nets[*b.clock_root].name ) )
    throw argument_error( "cosim_equiv: clock roots differ" );

  // (label, net in a, net in b)
  std::vector<std::tuple<std::string, NetId, NetId>> probes;
  for ( auto n : a.primary_outputs )
    probes.emplace_back( a.nets[n].name, n, *b.find_net( a.nets[n].name ) );
  if ( a.stage != Stage::P && b.stage != Stage::P )
  {
    for ( auto const& c : a.cells )
    {
      if ( !is_register( lib.cell( c.lib_cell ).node_type ) )
        continue;
      auto const other = b.find_cell( c.instance_path );
      if ( !other || !is_register( lib.cell( b.cells[*other].lib_cell ).node_type ) )
        throw argument_error( "cosim_equiv: register '" + c.instance_path + "' missing in second netlist" );
      probes.emplace_back( c.instance_path, c.output_net, b.cells[*other].output_net );
    }
  }

  auto const stim = random_stimulus( a, n_vectors, seed );
  auto const wa = simulate( a, lib, stim, n_vectors );
  auto const wb = simulate( b, lib, stim, n_vectors );
  EquivalenceReport rep;
  rep.cycles_checked = n_vectors;
  rep.signals_compared = probes.size();
  for ( std::size_t c = 0; c < n_vectors; ++c )
    for ( auto const& [label, na, nb] : probes )
      if ( wa.value( na, c ) != wb.value( nb, c ) )
      {
        rep.equivalent = false;
        rep.mismatch_cycle = c;
        rep.mismatch_net = label;
        return rep;
      }
  return rep;
}

} // namespace pwrgraph
