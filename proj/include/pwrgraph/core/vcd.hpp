#pragma once

#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "../util/strings.hpp"
#include "types.hpp"

namespace pwrgraph
{

/*! \brief Per-net, per-cycle toggle bits (1 = the net changed during that cycle). */
struct ToggleTrace
{
  std::size_t n_cycles{ 0 };
  std::vector<std::vector<std::uint8_t>> bits; ///< bits[net][cycle]

  bool operator==( ToggleTrace const& ) const = default;
};

/*! \brief Read the VCD subset and sample toggles per clock period.
 *
 * Supported: `$timescale`, `$scope`/`$upscope`, `$var wire 1 <code> <name>`,
 * `$enddefinitions`, `$dumpvars`, `$comment`/`$date`/`$version`, `#<time>`
 * and scalar `0<code>` / `1<code>` changes. Cycle c covers
 * [c * clock_period, (c + 1) * clock_period); any value change inside the
 * window marks a toggle. Every net starts at 0, so a 1 dumped at time 0
 * is a cycle-0 toggle. Nets of `netlist` absent from the dump never toggle.
 */
inline ToggleTrace parse_vcd( std::string_view source, std::uint64_t clock_period, Netlist const& netlist )
{
  if ( clock_period == 0 )
    throw argument_error( "clock period must be positive" );
  struct tok
  {
    std::string_view text;
    std::size_t line, col;
  };
  std::vector<tok> toks;
  {
    std::size_t line = 1, col = 1, i = 0;
    while ( i < source.size() )
    {
      if ( std::isspace( static_cast<unsigned char>( source[i] ) ) )
      {
        if ( source[i] == '\n' )
        {
          ++line;
          col = 1;
        }
        else
          ++col;
        ++i;
        continue;
      }
      auto const start = i;
      auto const c0 = col;
      while ( i < source.size() && !std::isspace( static_cast<unsigned char>( source[i] ) ) )
      {
        ++i;
        ++col;
      }
      toks.push_back( { source.substr( start, i - start ), line, c0 } );
    }
  }

  std::unordered_map<std::string, NetId> code_to_net;
  std::vector<std::uint8_t> value( netlist.nets.size(), 0 );
  std::vector<std::vector<std::uint64_t>> change_cycles( netlist.nets.size() );
  std::size_t p = 0;
  auto fail = [&]( std::string const& msg, std::size_t at ) {
    auto const& t = toks[std::min( at, toks.size() - 1 )];
    return parse_error( msg, t.line, t.col );
  };
  auto skip_to_end = [&] {
    auto const start = p;
    while ( p < toks.size() && toks[p].text != "$end" )
      ++p;
    if ( p == toks.size() )
      throw fail( "missing $end", start );
    ++p;
  };

  bool in_defs = true;
  std::uint64_t now = 0;
  bool have_time = false;
  std::uint64_t last_change_time = 0;
  bool any_change = false;
  while ( p < toks.size() )
  {
    auto const t = toks[p].text;
    if ( in_defs )
    {
      if ( t == "$var" )
      {
        if ( p + 5 >= toks.size() )
          throw fail( "truncated $var", p );
        if ( toks[p + 1].text != "wire" || toks[p + 2].text != "1" )
          throw fail( "only '$var wire 1' declarations are supported", p );
        auto const code = std::string( toks[p + 3].text );
        auto const name = std::string( toks[p + 4].text );
        auto const net = netlist.find_net( name );
        if ( !net )
          throw fail( "signal '" + name + "' does not map to a netlist net", p + 4 );
        code_to_net[code] = *net;
        p += 5;
        if ( toks[p].text != "$end" )
          throw fail( "expected $end after $var", p );
        ++p;
      }
      else if ( t == "$enddefinitions" )
      {
        skip_to_end();
        in_defs = false;
      }
      else if ( t == "$timescale" || t == "$scope" || t == "$upscope" || t == "$comment" || t == "$date" ||
                t == "$version" )
        skip_to_end();
      else
        throw fail( "unexpected token '" + std::string( t ) + "' in header", p );
      continue;
    }

    if ( t == "$dumpvars" || t == "$end" || t == "$dumpall" || t == "$dumpon" || t == "$dumpoff" )
    {
      ++p;
      continue;
    }
    if ( t == "$comment" )
    {
      skip_to_end();
      continue;
    }
    if ( t[0] == '#' )
    {
      std::uint64_t ts;
      if ( !parse_int( t.substr( 1 ), ts ) )
        throw fail( "bad timestamp '" + std::string( t ) + "'", p );
      if ( have_time && ts < now )
        throw fail( "non-monotonic timestamp " + std::string( t ), p );
      now = ts;
      have_time = true;
      ++p;
      continue;
    }
    if ( t[0] == '0' || t[0] == '1' )
    {
      auto const code = std::string( t.substr( 1 ) );
      auto const it = code_to_net.find( code );
      if ( it == code_to_net.end() )
        throw fail( "unknown identifier code '" + code + "'", p );
      std::uint8_t const v = t[0] == '1';
      if ( v != value[it->second] )
      {
        value[it->second] = v;
        auto& cc = change_cycles[it->second];
        auto const cyc = now / clock_period;
        if ( cc.empty() || cc.back() != cyc )
          cc.push_back( cyc );
        last_change_time = std::max( last_change_time, now );
        any_change = true;
      }
      ++p;
      continue;
    }
    throw fail( "unsupported value change '" + std::string( t ) + "'", p );
  }

  std::uint64_t n = ( now + clock_period - 1 ) / clock_period;
  if ( any_change )
    n = std::max( n, last_change_time / clock_period + 1 );
  ToggleTrace trace;
  trace.n_cycles = static_cast<std::size_t>( n );
  trace.bits.assign( netlist.nets.size(), std::vector<std::uint8_t>( trace.n_cycles, 0 ) );
  for ( NetId i = 0; i < netlist.nets.size(); ++i )
    for ( auto c : change_cycles[i] )
      trace.bits[i][c] = 1;
  return trace;
}

} // namespace pwrgraph
