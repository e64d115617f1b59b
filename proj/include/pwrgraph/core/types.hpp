#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "../util/error.hpp"

namespace pwrgraph
{

/*! \brief Functional category of a cell; the one-hot node feature has one slot per category. */
enum class NodeType : std::uint8_t
{
  INV,
  BUF,
  AND,
  OR,
  NAND,
  NOR,
  XOR,
  XNOR,
  MUX,
  AOI,
  OAI,
  ADDER,
  TIE,
  DFF,
  DFFRS,
  LATCH,
  ICG,
  CK
};

inline constexpr std::size_t node_type_count = 18;

inline constexpr std::array<std::string_view, node_type_count> node_type_names = {
    "INV", "BUF", "AND", "OR", "NAND", "NOR", "XOR", "XNOR", "MUX",
    "AOI", "OAI", "ADDER", "TIE", "DFF", "DFFRS", "LATCH", "ICG", "CK" };

inline constexpr std::string_view to_string( NodeType t )
{
  return node_type_names[static_cast<std::size_t>( t )];
}

inline std::optional<NodeType> node_type_from_string( std::string_view s )
{
  for ( std::size_t i = 0; i < node_type_count; ++i )
    if ( node_type_names[i] == s )
      return static_cast<NodeType>( i );
  return std::nullopt;
}

enum class PowerGroup : std::uint8_t
{
  combinational,
  register_,
  clock_tree
};

inline constexpr PowerGroup group_of( NodeType t )
{
  switch ( t )
  {
  case NodeType::DFF:
  case NodeType::DFFRS:
  case NodeType::LATCH:
    return PowerGroup::register_;
  case NodeType::ICG:
  case NodeType::CK:
    return PowerGroup::clock_tree;
  default:
    return PowerGroup::combinational;
  }
}

inline constexpr bool is_register( NodeType t ) { return group_of( t ) == PowerGroup::register_; }
inline constexpr bool is_clock_cell( NodeType t ) { return group_of( t ) == PowerGroup::clock_tree; }

/*! \brief Logic behaviour of a library cell, refined from its NodeType by naming convention. */
enum class CellFunction : std::uint8_t
{
  inv,
  buf,
  and_,
  or_,
  nand,
  nor,
  xor_,
  xnor,
  mux,
  aoi,
  oai,
  adder_sum,
  adder_carry,
  tie_low,
  tie_high,
  dff,
  dffrs,
  latch,
  icg,
  clock_buffer
};

struct LibCell
{
  std::string name;
  NodeType node_type{ NodeType::BUF };
  CellFunction function{ CellFunction::buf };
  std::vector<std::string> inputs; ///< data pins, in evaluation order
  std::string output;
  std::optional<std::string> clock_pin;
  double internal_energy{ 0.0 };  ///< pJ per output toggle
  double clock_pin_energy{ 0.0 }; ///< pJ per active clock cycle
  double leakage{ 0.0 };          ///< nW
  double input_cap{ 0.0 };        ///< fF per input pin
  double drive_cap_limit{ 0.0 };  ///< fF

  bool operator==( LibCell const& ) const = default;
};

struct Library
{
  std::string name{ "lib" };
  std::map<std::string, LibCell, std::less<>> cells;
  double voltage{ 1.0 };     ///< V
  double frequency{ 1.0e9 }; ///< Hz

  LibCell const& cell( std::string_view n ) const
  {
    auto const it = cells.find( n );
    if ( it == cells.end() )
      throw argument_error( "unknown library cell '" + std::string( n ) + "'" );
    return it->second;
  }

  bool contains( std::string_view n ) const { return cells.find( n ) != cells.end(); }

  /*! \brief First cell (by name) with the given function and data-input count, if any. */
  LibCell const* find( CellFunction f, std::size_t n_inputs ) const
  {
    for ( auto const& [_, c] : cells )
      if ( c.function == f && c.inputs.size() == n_inputs )
        return &c;
    return nullptr;
  }

  bool operator==( Library const& ) const = default;
};

using NetId = std::uint32_t;
using CellId = std::uint32_t;

enum class Stage : std::uint8_t
{
  G,
  G_PLUS,
  P
};

inline constexpr std::string_view to_string( Stage s )
{
  switch ( s )
  {
  case Stage::G:
    return "G";
  case Stage::G_PLUS:
    return "G_PLUS";
  default:
    return "P";
  }
}

inline std::optional<Stage> stage_from_string( std::string_view s )
{
  if ( s == "G" )
    return Stage::G;
  if ( s == "G_PLUS" )
    return Stage::G_PLUS;
  if ( s == "P" )
    return Stage::P;
  return std::nullopt;
}

struct Net
{
  NetId id{ 0 };
  std::string name; ///< hierarchical name relative to the top module ("n1", "u0.alu.n7")
  double wire_cap{ 0.0 }; ///< fF, lumped

  bool operator==( Net const& ) const = default;
};

struct Cell
{
  CellId id{ 0 };
  std::string instance_path; ///< absolute, including the top module ("top.u0.g12")
  std::string lib_cell;
  std::vector<NetId> input_nets; ///< parallel to LibCell::inputs
  NetId output_net{ 0 };
  std::optional<NetId> clock_net;

  bool operator==( Cell const& ) const = default;
};

/*! \brief Module instance path of a cell ("top.u0.g12" -> "top.u0"). */
inline std::string_view module_of( std::string_view instance_path )
{
  auto const pos = instance_path.rfind( '.' );
  return pos == std::string_view::npos ? std::string_view{} : instance_path.substr( 0, pos );
}

/*! \brief True if `path` equals `prefix` or lies below it in the hierarchy. */
inline bool path_under( std::string_view path, std::string_view prefix )
{
  return path.size() >= prefix.size() && path.substr( 0, prefix.size() ) == prefix &&
         ( path.size() == prefix.size() || path[prefix.size()] == '.' );
}

/*! \brief Flattened hierarchical circuit.
 *
 * Cells are kept sorted by instance path and nets by name; ids equal vector
 * positions. Net names are relative to the top module, so the module that
 * declares net "u0.n3" is "<top>.u0".
 */
struct Netlist
{
  Stage stage{ Stage::G };
  std::string top{ "top" };
  std::vector<Cell> cells;
  std::vector<Net> nets;
  std::vector<NetId> primary_inputs;
  std::vector<NetId> primary_outputs;
  std::optional<NetId> clock_root;
  std::vector<std::string> hierarchy; ///< module instance paths, sorted, including the top

  std::optional<NetId> find_net( std::string_view name ) const
  {
    auto const it = std::lower_bound( nets.begin(), nets.end(), name,
                                      []( Net const& n, std::string_view v ) { return n.name < v; } );
    if ( it != nets.end() && it->name == name )
      return it->id;
    return std::nullopt;
  }

  std::optional<CellId> find_cell( std::string_view path ) const
  {
    auto const it = std::lower_bound( cells.begin(), cells.end(), path,
                                      []( Cell const& c, std::string_view v ) { return c.instance_path < v; } );
    if ( it != cells.end() && it->instance_path == path )
      return it->id;
    return std::nullopt;
  }

  /*! \brief Module instance that declares the net. */
  std::string net_owner( NetId n ) const
  {
    auto const& name = nets[n].name;
    auto const pos = name.rfind( '.' );
    return pos == std::string::npos ? top : top + "." + name.substr( 0, pos );
  }

  bool operator==( Netlist const& ) const = default;
};

/*! \brief Driver and sink pins of every net. */
struct Connectivity
{
  struct Sink
  {
    CellId cell;
    bool clock_pin;
  };

  std::vector<std::optional<CellId>> driver; ///< indexed by net; nullopt for primary inputs / undriven
  std::vector<std::vector<Sink>> sinks;       ///< one entry per connected pin

  explicit Connectivity( Netlist const& nl )
      : driver( nl.nets.size() ), sinks( nl.nets.size() )
  {
    for ( auto const& c : nl.cells )
    {
      if ( driver[c.output_net] )
        throw invariant_error( "net '" + nl.nets[c.output_net].name + "' is multiply driven" );
      driver[c.output_net] = c.id;
      for ( auto n : c.input_nets )
        sinks[n].push_back( { c.id, false } );
      if ( c.clock_net )
        sinks[*c.clock_net].push_back( { c.id, true } );
    }
  }

  std::size_t fanout( NetId n ) const { return sinks[n].size(); }
};

/*! \brief Sort cells by path and nets by name and renumber all ids accordingly. */
inline void canonicalize( Netlist& nl )
{
  std::vector<NetId> order( nl.nets.size() );
  for ( NetId i = 0; i < order.size(); ++i )
    order[i] = i;
  std::sort( order.begin(), order.end(), [&]( NetId a, NetId b ) { return nl.nets[a].name < nl.nets[b].name; } );
  std::vector<NetId> remap( nl.nets.size() );
  std::vector<Net> nets;
  nets.reserve( order.size() );
  for ( NetId i = 0; i < order.size(); ++i )
  {
    remap[order[i]] = i;
    nets.push_back( std::move( nl.nets[order[i]] ) );
    nets.back().id = i;
  }
  nl.nets = std::move( nets );

  for ( auto& c : nl.cells )
  {
    for ( auto& n : c.input_nets )
      n = remap[n];
    c.output_net = remap[c.output_net];
    if ( c.clock_net )
      c.clock_net = remap[*c.clock_net];
  }
  for ( auto& n : nl.primary_inputs )
    n = remap[n];
  for ( auto& n : nl.primary_outputs )
    n = remap[n];
  if ( nl.clock_root )
    nl.clock_root = remap[*nl.clock_root];

  std::sort( nl.cells.begin(), nl.cells.end(),
             []( Cell const& a, Cell const& b ) { return a.instance_path < b.instance_path; } );
  for ( CellId i = 0; i < nl.cells.size(); ++i )
    nl.cells[i].id = i;

  std::sort( nl.hierarchy.begin(), nl.hierarchy.end() );
  nl.hierarchy.erase( std::unique( nl.hierarchy.begin(), nl.hierarchy.end() ), nl.hierarchy.end() );
}

} // namespace pwrgraph
