#pragma once

#include <array>
#include <string>
#include <string_view>
#include <utility>

#include "types.hpp"

namespace pwrgraph
{

namespace detail
{
// Longest/most specific prefixes first: DFFRS before DFF, XNOR before XOR before OR, ...
inline constexpr std::array<std::pair<std::string_view, NodeType>, 22> name_rules = { {
    { "ICG", NodeType::ICG },
    { "CK", NodeType::CK },
    { "DFFRS", NodeType::DFFRS },
    { "DFFR", NodeType::DFFRS },
    { "DFFS", NodeType::DFFRS },
    { "DFF", NodeType::DFF },
    { "LAT", NodeType::LATCH },
    { "TIE", NodeType::TIE },
    { "XNOR", NodeType::XNOR },
    { "XOR", NodeType::XOR },
    { "NAND", NodeType::NAND },
    { "NOR", NodeType::NOR },
    { "AND", NodeType::AND },
    { "OR", NodeType::OR },
    { "INV", NodeType::INV },
    { "BUF", NodeType::BUF },
    { "MUX", NodeType::MUX },
    { "AOI", NodeType::AOI },
    { "OAI", NodeType::OAI },
    { "FA", NodeType::ADDER },
    { "HA", NodeType::ADDER },
    { "ADD", NodeType::ADDER },
} };
} // namespace detail

/*! \brief Classify a library cell name into one of the 18 node types.
 *
 * Classification is by name prefix (standard-cell naming convention):
 * `DFFX1` is a DFF, `CKBUFX4` a clock-tree cell, `AOI21X1` an AOI, etc.
 */
inline NodeType classify_cell( std::string_view lib_cell_name )
{
  for ( auto const& [prefix, type] : detail::name_rules )
    if ( lib_cell_name.substr( 0, prefix.size() ) == prefix )
      return type;
  throw argument_error( "cannot classify cell '" + std::string( lib_cell_name ) + "'" );
}

inline NodeType classify_cell( Library const& lib, std::string_view lib_cell_name )
{
  return lib.cell( lib_cell_name ).node_type;
}

/*! \brief Logic function of a cell; TIE and ADDER variants are told apart by name ("TIEHI", "FACO"). */
inline CellFunction function_of( std::string_view name, NodeType type )
{
  switch ( type )
  {
  case NodeType::INV:
    return CellFunction::inv;
  case NodeType::BUF:
    return CellFunction::buf;
  case NodeType::AND:
    return CellFunction::and_;
  case NodeType::OR:
    return CellFunction::or_;
  case NodeType::NAND:
    return CellFunction::nand;
  case NodeType::NOR:
    return CellFunction::nor;
  case NodeType::XOR:
    return CellFunction::xor_;
  case NodeType::XNOR:
    return CellFunction::xnor;
  case NodeType::MUX:
    return CellFunction::mux;
  case NodeType::AOI:
    return CellFunction::aoi;
  case NodeType::OAI:
    return CellFunction::oai;
  case NodeType::ADDER:
    return name.find( "CO" ) != std::string_view::npos ? CellFunction::adder_carry : CellFunction::adder_sum;
  case NodeType::TIE:
    return name.find( "HI" ) != std::string_view::npos ? CellFunction::tie_high : CellFunction::tie_low;
  case NodeType::DFF:
    return CellFunction::dff;
  case NodeType::DFFRS:
    return CellFunction::dffrs;
  case NodeType::LATCH:
    return CellFunction::latch;
  case NodeType::ICG:
    return CellFunction::icg;
  case NodeType::CK:
    return CellFunction::clock_buffer;
  }
  return CellFunction::buf;
}

/*! \brief Evaluate a combinational function on data-input bits. */
template<typename Inputs>
inline bool eval_function( CellFunction f, Inputs const& in )
{
  auto const n = in.size();
  auto all = [&] { for ( std::size_t i = 0; i < n; ++i ) if ( !in[i] ) return false; return true; };
  auto any = [&] { for ( std::size_t i = 0; i < n; ++i ) if ( in[i] ) return true; return false; };
  auto parity = [&] { bool p = false; for ( std::size_t i = 0; i < n; ++i ) p ^= static_cast<bool>( in[i] ); return p; };
  switch ( f )
  {
  case CellFunction::inv:
    return !in[0];
  case CellFunction::buf:
    return in[0];
  case CellFunction::and_:
    return all();
  case CellFunction::or_:
    return any();
  case CellFunction::nand:
    return !all();
  case CellFunction::nor:
    return !any();
  case CellFunction::xor_:
  case CellFunction::adder_sum:
    return parity();
  case CellFunction::xnor:
    return !parity();
  case CellFunction::mux:
    return in[2] ? in[1] : in[0];
  case CellFunction::aoi:
  case CellFunction::oai:
  {
    // inputs pair up (A,B), (C,D), ...; an odd trailing input forms its own group
    bool const is_aoi = f == CellFunction::aoi;
    bool acc = !is_aoi;
    for ( std::size_t i = 0; i < n; i += 2 )
    {
      bool g = in[i];
      if ( i + 1 < n )
        g = is_aoi ? ( g && in[i + 1] ) : ( g || in[i + 1] );
      acc = is_aoi ? ( acc || g ) : ( acc && g );
    }
    return !acc;
  }
  case CellFunction::adder_carry:
  {
    std::size_t ones = 0;
    for ( std::size_t i = 0; i < n; ++i )
      ones += in[i] ? 1u : 0u;
    return n == 2 ? ones == 2 : ones >= 2;
  }
  case CellFunction::tie_low:
    return false;
  case CellFunction::tie_high:
    return true;
  default:
    throw argument_error( "eval_function: not a combinational function" );
  }
}

} // namespace pwrgraph
