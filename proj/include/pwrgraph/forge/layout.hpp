#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "../util/rng.hpp"
#include "editor.hpp"
#include "rewrite.hpp"

namespace pwrgraph
{

struct LayoutParams
{
  std::size_t max_fanout{ 8 };
  std::size_t branching{ 4 };
  double wire_cap_per_fanout{ 2.0 }; ///< fF per driven pin
  std::size_t rewrites{ 20 };
  std::uint64_t seed{ 1 };
  std::string buffer_cell{ "BUFX4" };
  std::string clock_cell{ "CKBUFX4" };
};

/*! \brief Number of cells in a balanced tree with `branching` children per cell over `sinks` leaves. */
inline std::size_t clock_tree_cell_count( std::size_t sinks, std::size_t branching )
{
  std::size_t total = 0;
  do
  {
    sinks = ( sinks + branching - 1 ) / branching;
    total += sinks;
  } while ( sinks > 1 );
  return total;
}

inline std::size_t clock_tree_depth( std::size_t sinks, std::size_t branching )
{
  std::size_t depth = 0;
  do
  {
    sinks = ( sinks + branching - 1 ) / branching;
    ++depth;
  } while ( sinks > 1 );
  return depth;
}

namespace detail
{

/*! \brief Sink pins of a net grouped per cell, ordered by instance path. */
struct pin_group
{
  CellId cell;
  std::size_t pins;
};

inline std::vector<pin_group> data_sinks( NetlistEditor& ed, Connectivity const& conn, NetId n )
{
  std::map<std::string, pin_group> by_path;
  for ( auto const& s : conn.sinks[n] )
  {
    auto& g = by_path.try_emplace( ed.netlist().cells[s.cell].instance_path, pin_group{ s.cell, 0 } ).first->second;
    ++g.pins;
  }
  std::vector<pin_group> out;
  for ( auto& [_, g] : by_path )
    out.push_back( g );
  return out;
}

} // namespace detail

/*! \brief Emulated place-and-route of a stage-G netlist (stage P).
 *
 * 1. Data nets with more than `max_fanout` pins are split by BUF trees placed
 *    in the driver's module.
 * 2. Every clock source (the root and each ICG output) gets one balanced
 *    CK-buffer tree per sink module, placed in that module.
 * 3. `rewrites` function-preserving rewrites, refusing removals that would
 *    undo step 1.
 * 4. Every net gets wire_cap = wire_cap_per_fanout * pin count.
 */
inline Netlist layout_transform( Netlist const& g, Library const& lib, LayoutParams const& p )
{
  if ( g.stage != Stage::G )
    throw argument_error( "layout_transform expects a stage G netlist" );
  if ( p.max_fanout < 2 || p.branching < 2 )
    throw argument_error( "layout_transform: max_fanout and branching must be at least 2" );
  auto const& buf = lib.cell( p.buffer_cell );
  auto const& ck = lib.cell( p.clock_cell );
  if ( buf.function != CellFunction::buf || ck.node_type != NodeType::CK )
    throw argument_error( "layout_transform: buffer/clock cell has the wrong type" );

  NetlistEditor ed( g, lib );

  // 1. fanout buffering
  {
    auto const conn = ed.connectivity();
    auto const n_nets = ed.netlist().nets.size();
    std::vector<std::uint8_t> is_clock( n_nets, 0 );
    if ( g.clock_root )
      is_clock[*g.clock_root] = 1;
    for ( auto const& c : g.cells )
      if ( is_clock_cell( lib.cell( c.lib_cell ).node_type ) )
        is_clock[c.output_net] = 1;
    for ( NetId n = 0; n < n_nets; ++n )
    {
      if ( is_clock[n] || conn.fanout( n ) <= p.max_fanout )
        continue;
      auto const module = conn.driver[n] ? std::string( module_of( ed.netlist().cells[*conn.driver[n]].instance_path ) )
                                         : g.top;
      // leaves: sink cells (with their pin multiplicity); each level packs up to max_fanout pins per buffer
      struct item
      {
        std::vector<CellId> cells; // cells whose pins on `n` move to the new net
        std::size_t pins;
        std::string module;
      };
      std::vector<item> level;
      for ( auto const& s : detail::data_sinks( ed, conn, n ) )
        level.push_back( { { s.cell }, s.pins, std::string( module_of( ed.netlist().cells[s.cell].instance_path ) ) } );
      std::vector<std::pair<CellId, NetId>> rewire; // (cell, new net) for leaf sinks
      bool first = true;
      while ( true )
      {
        std::size_t total = 0;
        for ( auto const& it : level )
          total += it.pins;
        if ( total <= p.max_fanout )
          break;
        std::vector<item> next;
        std::size_t i = 0;
        while ( i < level.size() )
        {
          std::size_t pins = 0;
          std::vector<std::string> mods{ module };
          std::vector<std::size_t> members;
          while ( i < level.size() && ( members.empty() || pins + level[i].pins <= p.max_fanout ) )
          {
            pins += level[i].pins;
            mods.push_back( level[i].module );
            members.push_back( i++ );
          }
          auto const out = ed.add_net_in( ed.common_ancestor( mods ), "lay_n" );
          auto const b = ed.add_cell( module, "lay_buf", buf.name, { n }, out );
          for ( auto m : members )
          {
            if ( first )
              rewire.emplace_back( level[m].cells[0], out );
            else
              for ( auto c : level[m].cells )
                ed.cell( c ).input_nets[0] = out;
          }
          next.push_back( { { b }, 1, module } );
        }
        first = false;
        level = std::move( next );
      }
      for ( auto const& [c, out] : rewire )
        for ( auto& in : ed.cell( c ).input_nets )
          if ( in == n )
            in = out;
    }
  }

  // 2. clock trees
  {
    auto const conn = ed.connectivity();
    std::vector<NetId> sources;
    if ( g.clock_root )
      sources.push_back( *g.clock_root );
    for ( auto const& c : g.cells )
      if ( lib.cell( c.lib_cell ).node_type == NodeType::ICG )
        sources.push_back( c.output_net );
    for ( auto src : sources )
    {
      std::map<std::string, std::vector<CellId>> by_module;
      for ( auto const& s : conn.sinks[src] )
        if ( s.clock_pin )
          by_module[std::string( module_of( ed.netlist().cells[s.cell].instance_path ) )].push_back( s.cell );
      for ( auto& [module, sinks] : by_module )
      {
        std::sort( sinks.begin(), sinks.end(), [&]( CellId a, CellId b ) {
          return ed.netlist().cells[a].instance_path < ed.netlist().cells[b].instance_path;
        } );
        // bottom-up: each level's cells drive up to `branching` items of the level below
        std::vector<CellId> level = sinks;
        do
        {
          std::vector<CellId> next;
          for ( std::size_t i = 0; i < level.size(); i += p.branching )
          {
            auto const out = ed.add_net_in( module, "lay_ck_n" );
            auto const cell = ed.add_cell( module, "lay_ck", ck.name, {}, out, src );
            for ( std::size_t j = i; j < std::min( level.size(), i + p.branching ); ++j )
              ed.cell( level[j] ).clock_net = out;
            next.push_back( cell );
          }
          level = std::move( next );
        } while ( level.size() > 1 );
      }
    }
  }

  // 3. restructuring
  {
    Rewriter rw( ed, "lay_eq", p.max_fanout );
    rng_t rng( derive_seed( p.seed, 0x1a7 ) );
    rw.run( p.rewrites, rng );
  }

  auto out = ed.finish( Stage::P );

  // 4. wire load
  Connectivity const conn( out );
  for ( auto& n : out.nets )
    n.wire_cap = p.wire_cap_per_fanout * static_cast<double>( conn.fanout( n.id ) );
  return out;
}

} // namespace pwrgraph
