#pragma once

#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "../core/topology.hpp"
#include "../core/types.hpp"

namespace pwrgraph
{

/*! \brief Mutable view of a Netlist for generators and rewrites.
 *
 * Cells and nets are appended with ids equal to their position; removed
 * items are tombstoned and dropped by finish(), which also re-establishes
 * the canonical ordering and validates the result.
 */
class NetlistEditor
{
public:
  NetlistEditor( Netlist nl, Library const& lib ) : nl_( std::move( nl ) ), lib_( lib )
  {
    for ( auto const& c : nl_.cells )
      paths_.insert( c.instance_path );
    for ( auto const& n : nl_.nets )
      names_.insert( n.name );
    cell_alive_.assign( nl_.cells.size(), 1 );
    net_alive_.assign( nl_.nets.size(), 1 );
  }

  Netlist const& netlist() const { return nl_; }
  Library const& library() const { return lib_; }
  Cell& cell( CellId id ) { return nl_.cells[id]; }
  bool alive( CellId id ) const { return cell_alive_[id] != 0; }
  LibCell const& lib_cell( CellId id ) const { return lib_.cell( nl_.cells[id].lib_cell ); }

  /*! \brief Name relative to the top for a net declared in module instance `module_path`. */
  std::string rel_of( std::string const& module_path ) const
  {
    return module_path == nl_.top ? std::string{} : module_path.substr( nl_.top.size() + 1 );
  }

  NetId add_net_in( std::string const& module_path, std::string const& stem )
  {
    auto const rel = rel_of( module_path );
    std::string name;
    do
      name = ( rel.empty() ? std::string{} : rel + "." ) + stem + std::to_string( counter_++ );
    while ( names_.count( name ) );
    return add_net_named( name );
  }

  NetId add_net_named( std::string const& name, double wire_cap = 0.0 )
  {
    if ( !names_.insert( name ).second )
      throw invariant_error( "net name '" + name + "' already exists" );
    auto const id = static_cast<NetId>( nl_.nets.size() );
    nl_.nets.push_back( { id, name, wire_cap } );
    net_alive_.push_back( 1 );
    return id;
  }

  CellId add_cell( std::string const& module_path, std::string const& stem, std::string const& lib_cell,
                   std::vector<NetId> inputs, NetId output, std::optional<NetId> clock = std::nullopt )
  {
    std::string path;
    do
      path = module_path + "." + stem + std::to_string( counter_++ );
    while ( paths_.count( path ) );
    return add_cell_at( path, lib_cell, std::move( inputs ), output, clock );
  }

  CellId add_cell_at( std::string const& path, std::string const& lib_cell, std::vector<NetId> inputs, NetId output,
                      std::optional<NetId> clock = std::nullopt )
  {
    if ( !paths_.insert( path ).second )
      throw invariant_error( "instance path '" + path + "' already exists" );
    auto const id = static_cast<CellId>( nl_.cells.size() );
    nl_.cells.push_back( { id, path, lib_cell, std::move( inputs ), output, clock } );
    cell_alive_.push_back( 1 );
    return id;
  }

  void remove_cell( CellId id ) { cell_alive_[id] = 0; }
  void remove_net( NetId id ) { net_alive_[id] = 0; }

  /*! \brief Driver/sink view over the live cells (rebuilt on every call). */
  Connectivity connectivity() const
  {
    Netlist view;
    view.nets.resize( nl_.nets.size() );
    for ( auto const& c : nl_.cells )
      if ( cell_alive_[c.id] )
        view.cells.push_back( c );
    Connectivity conn( view );
    return conn;
  }

  /*! \brief Module instance path that must declare a net read or driven from `modules`. */
  std::string common_ancestor( std::vector<std::string> const& modules ) const
  {
    if ( modules.empty() )
      return nl_.top;
    std::string lca = modules.front();
    for ( auto const& m : modules )
      while ( !path_under( m, lca ) )
        lca = std::string( module_of( lca ) );
    return lca;
  }

  bool is_primary_output( NetId n ) const
  {
    return std::find( nl_.primary_outputs.begin(), nl_.primary_outputs.end(), n ) != nl_.primary_outputs.end();
  }

  bool is_primary_input( NetId n ) const
  {
    return std::find( nl_.primary_inputs.begin(), nl_.primary_inputs.end(), n ) != nl_.primary_inputs.end();
  }

  Netlist& raw() { return nl_; }

  Netlist finish( Stage stage )
  {
    Netlist out;
    out.stage = stage;
    out.top = nl_.top;
    out.hierarchy = nl_.hierarchy;
    std::vector<NetId> remap( nl_.nets.size(), 0 );
    for ( auto const& n : nl_.nets )
      if ( net_alive_[n.id] )
      {
        remap[n.id] = static_cast<NetId>( out.nets.size() );
        out.nets.push_back( { remap[n.id], n.name, n.wire_cap } );
      }
    for ( auto const& c : nl_.cells )
    {
      if ( !cell_alive_[c.id] )
        continue;
      Cell nc = c;
      nc.id = static_cast<CellId>( out.cells.size() );
      for ( auto& n : nc.input_nets )
        n = checked( remap, n, c );
      nc.output_net = checked( remap, nc.output_net, c );
      if ( nc.clock_net )
        nc.clock_net = checked( remap, *nc.clock_net, c );
      out.cells.push_back( std::move( nc ) );
    }
    for ( auto n : nl_.primary_inputs )
      out.primary_inputs.push_back( remap[n] );
    for ( auto n : nl_.primary_outputs )
      out.primary_outputs.push_back( remap[n] );
    if ( nl_.clock_root )
      out.clock_root = remap[*nl_.clock_root];
    canonicalize( out );
    validate( out, lib_ );
    return out;
  }

private:
  NetId checked( std::vector<NetId> const& remap, NetId n, Cell const& c ) const
  {
    if ( !net_alive_[n] )
      throw invariant_error( "cell '" + c.instance_path + "' references removed net '" + nl_.nets[n].name + "'" );
    return remap[n];
  }

  Netlist nl_;
  Library const& lib_;
  std::unordered_set<std::string> paths_, names_;
  std::vector<std::uint8_t> cell_alive_, net_alive_;
  std::uint64_t counter_{ 0 };
};

} // namespace pwrgraph
