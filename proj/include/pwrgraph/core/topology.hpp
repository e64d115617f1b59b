#pragma once

#include <string>
#include <vector>

#include "types.hpp"

namespace pwrgraph
{

namespace detail
{

// Kahn's algorithm over the cells selected by `in_set`, with one edge per pin: data
// pins when `clock_pins` is false, clock pins otherwise.
template<typename InSet>
std::vector<CellId> topo_sort( Netlist const& nl, Connectivity const& conn, InSet&& in_set, bool clock_pins,
                               char const* what )
{
  std::vector<std::uint32_t> indeg( nl.cells.size(), 0 );
  for ( auto const& c : nl.cells )
  {
    if ( !in_set( c ) )
      continue;
    auto count = [&]( NetId n ) {
      if ( auto d = conn.driver[n]; d && in_set( nl.cells[*d] ) )
        ++indeg[c.id];
    };
    if ( clock_pins )
    {
      if ( c.clock_net )
        count( *c.clock_net );
    }
    else
      for ( auto n : c.input_nets )
        count( n );
  }
  std::vector<CellId> order;
  for ( auto const& c : nl.cells )
    if ( in_set( c ) && indeg[c.id] == 0 )
      order.push_back( c.id );
  for ( std::size_t head = 0; head < order.size(); ++head )
  {
    for ( auto const& s : conn.sinks[nl.cells[order[head]].output_net] )
      if ( s.clock_pin == clock_pins && in_set( nl.cells[s.cell] ) && --indeg[s.cell] == 0 )
        order.push_back( s.cell );
  }
  for ( auto const& c : nl.cells )
    if ( in_set( c ) && indeg[c.id] > 0 )
      throw invariant_error( std::string( what ) + " loop through net '" + nl.nets[c.output_net].name + "'" );
  return order;
}

} // namespace detail

/*! \brief Combinational cells in evaluation order (register outputs and primary inputs are sources).
 *
 * Throws invariant_error if the register-cut graph contains a cycle.
 */
inline std::vector<CellId> combinational_order( Netlist const& nl, Library const& lib, Connectivity const& conn )
{
  std::vector<char> comb( nl.cells.size() );
  for ( auto const& c : nl.cells )
    comb[c.id] = group_of( lib.cell( c.lib_cell ).node_type ) == PowerGroup::combinational;
  return detail::topo_sort(
      nl, conn, [&]( Cell const& c ) { return comb[c.id] != 0; }, false, "combinational" );
}

/*! \brief CK/ICG cells ordered from the clock root outwards. */
inline std::vector<CellId> clock_order( Netlist const& nl, Library const& lib, Connectivity const& conn )
{
  std::vector<char> clk( nl.cells.size() );
  for ( auto const& c : nl.cells )
    clk[c.id] = is_clock_cell( lib.cell( c.lib_cell ).node_type );
  return detail::topo_sort(
      nl, conn, [&]( Cell const& c ) { return clk[c.id] != 0; }, true, "clock network" );
}

/*! \brief Check the structural invariants that the parser and every transform must uphold. */
inline void validate( Netlist const& nl, Library const& lib )
{
  for ( auto const& c : nl.cells )
  {
    auto const& lc = lib.cell( c.lib_cell );
    if ( c.input_nets.size() != lc.inputs.size() )
      throw invariant_error( "cell '" + c.instance_path + "' has wrong pin count" );
    if ( lc.clock_pin.has_value() != c.clock_net.has_value() )
      throw invariant_error( "cell '" + c.instance_path + "' clock pin mismatch" );
    auto check = [&]( NetId n ) {
      if ( n >= nl.nets.size() )
        throw invariant_error( "cell '" + c.instance_path + "' references a missing net" );
    };
    for ( auto n : c.input_nets )
      check( n );
    check( c.output_net );
    if ( c.clock_net )
      check( *c.clock_net );
  }
  if ( nl.stage != Stage::P )
    for ( auto const& n : nl.nets )
      if ( n.wire_cap != 0.0 )
        throw invariant_error( "net '" + n.name + "' carries wire capacitance in a pre-layout netlist" );
  Connectivity const conn( nl );
  for ( auto pi : nl.primary_inputs )
    if ( conn.driver[pi] )
      throw invariant_error( "net '" + nl.nets[pi].name + "' is multiply driven (primary input and cell output)" );
  combinational_order( nl, lib, conn );
  clock_order( nl, lib, conn );
}

} // namespace pwrgraph
