#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"

namespace pwrgraph
{

inline bool starts_with( std::string_view s, std::string_view prefix )
{
  return s.substr( 0, prefix.size() ) == prefix;
}

inline std::string_view trim( std::string_view s )
{
  auto const first = s.find_first_not_of( " \t\r\n" );
  if ( first == std::string_view::npos )
    return {};
  auto const last = s.find_last_not_of( " \t\r\n" );
  return s.substr( first, last - first + 1 );
}

inline std::vector<std::string> split( std::string_view s, char sep )
{
  std::vector<std::string> out;
  std::size_t start = 0;
  while ( true )
  {
    auto const pos = s.find( sep, start );
    out.emplace_back( s.substr( start, pos - start ) );
    if ( pos == std::string_view::npos )
      break;
    start = pos + 1;
  }
  return out;
}

/*! \brief Shortest decimal text that parses back to exactly the same double. */
inline std::string format_double( double v )
{
  char buf[32];
  auto const res = std::to_chars( buf, buf + sizeof( buf ), v );
  return std::string( buf, res.ptr );
}

inline bool parse_double( std::string_view s, double& out )
{
  s = trim( s );
  if ( s.empty() )
    return false;
  if ( s.front() == '+' )
    s.remove_prefix( 1 );
  auto const res = std::from_chars( s.data(), s.data() + s.size(), out );
  return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

template<typename Int>
bool parse_int( std::string_view s, Int& out )
{
  s = trim( s );
  auto const res = std::from_chars( s.data(), s.data() + s.size(), out );
  return !s.empty() && res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

inline std::string read_file( std::string const& path )
{
  std::ifstream in( path, std::ios::binary );
  if ( !in )
    throw error( "cannot open " + path );
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file( std::string const& path, std::string_view content )
{
  std::ofstream out( path, std::ios::binary );
  if ( !out )
    throw error( "cannot write " + path );
  out << content;
}

/*! \brief 64-bit FNV-1a; stable across runs and platforms, used for content stamps. */
inline std::uint64_t fnv1a( std::string_view data, std::uint64_t h = 0xcbf29ce484222325ull )
{
  for ( unsigned char c : data )
  {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64( std::uint64_t v )
{
  char buf[17];
  std::snprintf( buf, sizeof( buf ), "%016llx", static_cast<unsigned long long>( v ) );
  return buf;
}

} // namespace pwrgraph
