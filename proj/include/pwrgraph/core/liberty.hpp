#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "../util/strings.hpp"
#include "classify.hpp"
#include "types.hpp"

namespace pwrgraph
{

/*! \file liberty.hpp
 *  \brief Reader/writer for the liberty-lite cell library format (version 1).
 *
 * \verbatim
 * liberty_lite 1;
 * library fixture {
 *   voltage 1.0;            # volts
 *   frequency 1e9;          # hertz
 *   cell NAND2X1 {
 *     inputs A B;           # data pins in evaluation order (may be empty)
 *     clock CK;             # sequential, ICG and CK cells only
 *     output Y;
 *     internal_energy 0.004;   # pJ per output toggle
 *     clock_pin_energy 0;      # pJ per active clock cycle
 *     leakage 1.2;             # nW
 *     input_cap 1.6;           # fF per input pin
 *     drive_cap_limit 60;      # fF
 *     type NAND;               # optional, must agree with the name-based class
 *   }
 * }
 * \endverbatim
 */

inline constexpr int liberty_lite_version = 1;

namespace detail
{

struct lib_token
{
  std::string text;
  std::size_t line, col;
};

inline std::vector<lib_token> lex_liberty( std::string_view src )
{
  std::vector<lib_token> out;
  std::size_t line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&]( char c ) {
    if ( c == '\n' )
    {
      ++line;
      col = 1;
    }
    else
      ++col;
  };
  while ( i < src.size() )
  {
    char const c = src[i];
    if ( c == '#' )
    {
      while ( i < src.size() && src[i] != '\n' )
        advance( src[i++] );
      continue;
    }
    if ( std::isspace( static_cast<unsigned char>( c ) ) )
    {
      advance( src[i++] );
      continue;
    }
    if ( c == ';' || c == '{' || c == '}' )
    {
      out.push_back( { std::string( 1, c ), line, col } );
      advance( src[i++] );
      continue;
    }
    auto const l = line, cl = col;
    std::size_t const start = i;
    while ( i < src.size() && !std::isspace( static_cast<unsigned char>( src[i] ) ) && src[i] != ';' &&
            src[i] != '{' && src[i] != '}' && src[i] != '#' )
      advance( src[i++] );
    out.push_back( { std::string( src.substr( start, i - start ) ), l, cl } );
  }
  return out;
}

} // namespace detail

/*! \brief Parse a liberty-lite document. Throws parse_error on any violation. */
inline Library parse_liberty_lite( std::string_view source )
{
  auto const toks = detail::lex_liberty( source );
  std::size_t p = 0;
  auto fail = [&]( std::string const& msg ) -> parse_error {
    if ( p < toks.size() )
      return parse_error( msg, toks[p].line, toks[p].col );
    auto const l = toks.empty() ? 1 : toks.back().line;
    return parse_error( msg + " (at end of input)", l, 1 );
  };
  auto peek = [&]() -> std::string const& {
    static std::string const eof;
    return p < toks.size() ? toks[p].text : eof;
  };
  auto expect = [&]( std::string_view t ) {
    if ( peek() != t )
      throw fail( "expected '" + std::string( t ) + "', got '" + peek() + "'" );
    ++p;
  };
  auto word = [&]( char const* what ) {
    auto const& t = peek();
    if ( t.empty() || t == ";" || t == "{" || t == "}" )
      throw fail( std::string( "expected " ) + what );
    return toks[p++].text;
  };
  auto number = [&]( char const* what ) {
    double v;
    if ( !parse_double( peek(), v ) )
      throw fail( std::string( "expected a number for " ) + what );
    ++p;
    return v;
  };

  expect( "liberty_lite" );
  int version;
  if ( !parse_int( peek(), version ) || version != liberty_lite_version )
    throw fail( "unsupported liberty_lite version '" + peek() + "'" );
  ++p;
  expect( ";" );

  Library lib;
  expect( "library" );
  lib.name = word( "library name" );
  expect( "{" );
  bool have_voltage = false, have_frequency = false;
  while ( peek() != "}" )
  {
    if ( p >= toks.size() )
      throw fail( "unterminated library block" );
    auto const key_pos = p;
    auto const key = word( "statement" );
    if ( key == "voltage" || key == "frequency" )
    {
      auto const v = number( key.c_str() );
      if ( !( v > 0 ) )
      {
        p = key_pos;
        throw fail( key + " must be positive" );
      }
      ( key == "voltage" ? lib.voltage : lib.frequency ) = v;
      ( key == "voltage" ? have_voltage : have_frequency ) = true;
      expect( ";" );
      continue;
    }
    if ( key != "cell" )
    {
      p = key_pos;
      throw fail( "unknown library statement '" + key + "'" );
    }

    LibCell cell;
    auto const name_pos = p;
    cell.name = word( "cell name" );
    if ( lib.contains( cell.name ) )
    {
      p = name_pos;
      throw fail( "duplicate cell name '" + cell.name + "'" );
    }
    try
    {
      cell.node_type = classify_cell( cell.name );
    }
    catch ( argument_error const& e )
    {
      p = name_pos;
      throw fail( e.what() );
    }
    cell.function = function_of( cell.name, cell.node_type );

    expect( "{" );
    std::set<std::string> seen;
    while ( peek() != "}" )
    {
      if ( p >= toks.size() )
        throw fail( "unterminated cell block" );
      auto const fpos = p;
      auto const field = word( "cell field" );
      if ( !seen.insert( field ).second )
      {
        p = fpos;
        throw fail( "field '" + field + "' given twice in cell '" + cell.name + "'" );
      }
      if ( field == "inputs" )
      {
        while ( peek() != ";" )
          cell.inputs.push_back( word( "pin name" ) );
      }
      else if ( field == "output" )
        cell.output = word( "pin name" );
      else if ( field == "clock" )
        cell.clock_pin = word( "pin name" );
      else if ( field == "type" )
      {
        auto const t = word( "node type" );
        auto const parsed = node_type_from_string( t );
        if ( !parsed || *parsed != cell.node_type )
        {
          p = fpos;
          throw fail( "type '" + t + "' disagrees with classification of '" + cell.name + "' as " +
                      std::string( to_string( cell.node_type ) ) );
        }
      }
      else
      {
        double* slot = field == "internal_energy"    ? &cell.internal_energy
                       : field == "clock_pin_energy" ? &cell.clock_pin_energy
                       : field == "leakage"          ? &cell.leakage
                       : field == "input_cap"        ? &cell.input_cap
                       : field == "drive_cap_limit"  ? &cell.drive_cap_limit
                                                     : nullptr;
        if ( !slot )
        {
          p = fpos;
          throw fail( "unknown cell field '" + field + "'" );
        }
        auto const vpos = p;
        *slot = number( field.c_str() );
        if ( *slot < 0 || !std::isfinite( *slot ) )
        {
          p = vpos;
          throw fail( field + " of cell '" + cell.name + "' must be a finite non-negative number" );
        }
      }
      expect( ";" );
    }
    for ( auto const* req : { "inputs", "output", "internal_energy", "clock_pin_energy", "leakage", "input_cap",
                              "drive_cap_limit" } )
      if ( !seen.count( req ) )
        throw fail( "cell '" + cell.name + "' is missing required field '" + req + "'" );

    bool const clocked = is_register( cell.node_type ) || is_clock_cell( cell.node_type );
    if ( clocked != cell.clock_pin.has_value() )
      throw fail( "cell '" + cell.name + ( clocked ? "' requires a clock pin" : "' must not have a clock pin" ) );
    if ( !clocked && cell.clock_pin_energy > 0 )
      throw fail( "cell '" + cell.name + "' has clock_pin_energy but is not a clocked cell" );

    std::size_t need = 0;
    switch ( cell.function )
    {
    case CellFunction::tie_low:
    case CellFunction::tie_high:
    case CellFunction::clock_buffer:
      need = 0;
      break;
    case CellFunction::inv:
    case CellFunction::buf:
    case CellFunction::dff:
    case CellFunction::latch:
    case CellFunction::icg:
      need = 1;
      break;
    case CellFunction::mux:
    case CellFunction::dffrs:
      need = 3;
      break;
    default:
      need = cell.inputs.size() >= 2 ? cell.inputs.size() : 2;
    }
    if ( cell.inputs.size() != need )
      throw fail( "cell '" + cell.name + "' has " + std::to_string( cell.inputs.size() ) + " inputs, expected " +
                  std::to_string( need ) );

    expect( "}" );
    lib.cells.emplace( cell.name, std::move( cell ) );
  }
  expect( "}" );
  if ( p != toks.size() )
    throw fail( "trailing content after library block" );
  if ( !have_voltage || !have_frequency )
    throw fail( "library requires voltage and frequency" );
  return lib;
}

inline std::string write_liberty_lite( Library const& lib )
{
  std::ostringstream os;
  os << "liberty_lite " << liberty_lite_version << ";\n";
  os << "library " << lib.name << " {\n";
  os << "  voltage " << format_double( lib.voltage ) << ";\n";
  os << "  frequency " << format_double( lib.frequency ) << ";\n";
  for ( auto const& [name, c] : lib.cells )
  {
    os << "  cell " << name << " {\n";
    os << "    type " << to_string( c.node_type ) << ";\n";
    os << "    inputs";
    for ( auto const& pin : c.inputs )
      os << ' ' << pin;
    os << ";\n";
    if ( c.clock_pin )
      os << "    clock " << *c.clock_pin << ";\n";
    os << "    output " << c.output << ";\n";
    os << "    internal_energy " << format_double( c.internal_energy ) << ";\n";
    os << "    clock_pin_energy " << format_double( c.clock_pin_energy ) << ";\n";
    os << "    leakage " << format_double( c.leakage ) << ";\n";
    os << "    input_cap " << format_double( c.input_cap ) << ";\n";
    os << "    drive_cap_limit " << format_double( c.drive_cap_limit ) << ";\n";
    os << "  }\n";
  }
  os << "}\n";
  return os.str();
}

/*! \brief Text of the bundled 18-type fixture library (1.0 V, 1 GHz). */
inline std::string fixture_library_text()
{
  struct row
  {
    char const* name;
    char const* inputs;
    char const* clock;
    char const* output;
    double e_int, e_ck, leak, cap, limit;
  };
  // clang-format off
  static constexpr row rows[] = {
    { "INVX1",   "A",     nullptr, "Y",   0.0030, 0.0,    1.0, 1.4,  40 },
    { "INVX4",   "A",     nullptr, "Y",   0.0060, 0.0,    3.0, 3.0, 120 },
    { "BUFX1",   "A",     nullptr, "Y",   0.0045, 0.0,    1.3, 1.4,  50 },
    { "BUFX4",   "A",     nullptr, "Y",   0.0080, 0.0,    3.4, 2.8, 150 },
    { "AND2X1",  "A B",   nullptr, "Y",   0.0055, 0.0,    1.6, 1.5,  50 },
    { "AND3X1",  "A B C", nullptr, "Y",   0.0070, 0.0,    2.0, 1.5,  50 },
    { "OR2X1",   "A B",   nullptr, "Y",   0.0058, 0.0,    1.7, 1.5,  50 },
    { "OR3X1",   "A B C", nullptr, "Y",   0.0074, 0.0,    2.1, 1.6,  50 },
    { "NAND2X1", "A B",   nullptr, "Y",   0.0040, 0.0,    1.2, 1.6,  45 },
    { "NAND3X1", "A B C", nullptr, "Y",   0.0052, 0.0,    1.5, 1.7,  45 },
    { "NOR2X1",  "A B",   nullptr, "Y",   0.0044, 0.0,    1.3, 1.7,  45 },
    { "NOR3X1",  "A B C", nullptr, "Y",   0.0058, 0.0,    1.6, 1.8,  45 },
    { "XOR2X1",  "A B",   nullptr, "Y",   0.0090, 0.0,    2.6, 2.2,  50 },
    { "XNOR2X1", "A B",   nullptr, "Y",   0.0092, 0.0,    2.7, 2.2,  50 },
    { "MUX2X1",  "A B S", nullptr, "Y",   0.0085, 0.0,    2.4, 1.9,  50 },
    { "AOI21X1", "A B C", nullptr, "Y",   0.0060, 0.0,    1.8, 1.7,  45 },
    { "AOI22X1", "A B C D", nullptr, "Y", 0.0072, 0.0,    2.2, 1.7,  45 },
    { "OAI21X1", "A B C", nullptr, "Y",   0.0062, 0.0,    1.8, 1.7,  45 },
    { "OAI22X1", "A B C D", nullptr, "Y", 0.0074, 0.0,    2.2, 1.7,  45 },
    { "FASX1",   "A B C", nullptr, "S",   0.0120, 0.0,    3.2, 2.4,  50 },
    { "FACOX1",  "A B C", nullptr, "CO",  0.0100, 0.0,    2.9, 2.3,  50 },
    { "TIEHIX1", "",      nullptr, "Y",   0.0,    0.0,    0.5, 0.0,  20 },
    { "TIELOX1", "",      nullptr, "Y",   0.0,    0.0,    0.5, 0.0,  20 },
    { "DFFX1",   "D",     "CK",    "Q",   0.0100, 0.0120, 4.5, 1.8,  60 },
    { "DFFRSX1", "D R S", "CK",    "Q",   0.0115, 0.0135, 5.5, 1.9,  60 },
    { "LATX1",   "D",     "CK",    "Q",   0.0080, 0.0090, 3.5, 1.6,  50 },
    { "ICGX1",   "E",     "CK",    "GCK", 0.0150, 0.0080, 2.0, 2.0,  80 },
    { "CKBUFX2", "",      "A",     "Y",   0.0180, 0.0060, 3.0, 2.5, 100 },
    { "CKBUFX4", "",      "A",     "Y",   0.0300, 0.0090, 5.5, 3.5, 200 },
  };
  // clang-format on
  std::ostringstream os;
  os << "liberty_lite 1;\nlibrary fixture {\n  voltage 1.0;\n  frequency 1e9;\n";
  for ( auto const& r : rows )
  {
    os << "  cell " << r.name << " {\n    inputs";
    if ( *r.inputs )
      os << ' ' << r.inputs;
    os << ";\n";
    if ( r.clock )
      os << "    clock " << r.clock << ";\n";
    os << "    output " << r.output << ";\n"
       << "    internal_energy " << format_double( r.e_int ) << ";\n"
       << "    clock_pin_energy " << format_double( r.e_ck ) << ";\n"
       << "    leakage " << format_double( r.leak ) << ";\n"
       << "    input_cap " << format_double( r.cap ) << ";\n"
       << "    drive_cap_limit " << format_double( r.limit ) << ";\n  }\n";
  }
  os << "}\n";
  return os.str();
}

inline Library const& fixture_library()
{
  static Library const lib = parse_liberty_lite( fixture_library_text() );
  return lib;
}

} // namespace pwrgraph
