#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "../core/types.hpp"

namespace pwrgraph
{

inline constexpr char const* glue_scope = "_glue";

/*! \brief One sub-module: a hierarchy prefix (or the glue scope) and its cells, sorted by id. */
struct Scope
{
  std::string name;
  std::vector<CellId> cells;

  bool operator==( Scope const& ) const = default;
};

using Segmentation = std::vector<Scope>;

/*! \brief Split the cells into non-overlapping sub-modules.
 *
 * A hierarchy instance is a scope when it holds at least `min_cells` cells
 * (counting everything below it) and none of its child instances does.
 * Cells outside every scope are collected in the glue scope. Scopes are
 * sorted by name, with glue last.
 */
inline Segmentation segment( Netlist const& nl, std::size_t min_cells = 20 )
{
  std::map<std::string, std::size_t> total;
  for ( auto const& h : nl.hierarchy )
    total[h] = 0;
  for ( auto const& c : nl.cells )
  {
    auto m = std::string( module_of( c.instance_path ) );
    while ( !m.empty() )
    {
      if ( auto it = total.find( m ); it != total.end() )
        ++it->second;
      m = std::string( module_of( m ) );
    }
  }
  std::vector<std::string> chosen;
  for ( auto const& [h, n] : total )
  {
    if ( n < min_cells )
      continue;
    bool big_child = false;
    for ( auto const& [h2, n2] : total )
      if ( n2 >= min_cells && h2 != h && module_of( h2 ) == h )
        big_child = true;
    if ( !big_child )
      chosen.push_back( h );
  }
  Segmentation out;
  for ( auto const& n : chosen )
    out.push_back( { n, {} } );
  Scope glue{ glue_scope, {} };
  for ( auto const& c : nl.cells )
  {
    auto const it = std::find_if( out.begin(), out.end(), [&]( Scope const& s ) { return path_under( c.instance_path, s.name ); } );
    ( it == out.end() ? glue : *it ).cells.push_back( c.id );
  }
  if ( !glue.cells.empty() )
    out.push_back( std::move( glue ) );
  return out;
}

/*! \brief Assign the cells of a derived netlist (G_PLUS, P) to the scope names of its stage-G segmentation.
 *
 * Each cell goes to the longest scope name that is a prefix of its path; the
 * rest form the glue scope. Scopes are returned in the order of `names`;
 * a scope that received no cells is still listed, with an empty cell list.
 */
inline Segmentation assign_scopes( Netlist const& nl, std::vector<std::string> const& names )
{
  Segmentation out;
  for ( auto const& n : names )
    out.push_back( { n, {} } );
  std::size_t glue = names.size();
  for ( std::size_t i = 0; i < names.size(); ++i )
    if ( names[i] == glue_scope )
      glue = i;
  for ( auto const& c : nl.cells )
  {
    std::size_t best = names.size(), best_len = 0;
    for ( std::size_t i = 0; i < names.size(); ++i )
      if ( i != glue && names[i].size() >= best_len && path_under( c.instance_path, names[i] ) )
      {
        best = i;
        best_len = names[i].size();
      }
    if ( best == names.size() )
    {
      if ( glue == names.size() )
      {
        out.push_back( { glue_scope, {} } );
        glue = out.size() - 1;
      }
      best = glue;
    }
    out[best].cells.push_back( c.id );
  }
  return out;
}

inline std::vector<std::string> scope_names( Segmentation const& s )
{
  std::vector<std::string> names;
  for ( auto const& x : s )
    names.push_back( x.name );
  return names;
}

/*! \brief Pair every stage-G scope with the identically named scope of another stage.
 *
 * Returns (index in subs_g, index in subs_p). Throws when a G scope has no
 * non-empty counterpart, or when the other stage has scopes unknown to G.
 */
inline std::vector<std::pair<std::size_t, std::size_t>> align_stages( Segmentation const& subs_g, Segmentation const& subs_p )
{
  std::map<std::string, std::size_t> index;
  for ( std::size_t j = 0; j < subs_p.size(); ++j )
    if ( !subs_p[j].cells.empty() )
      index[subs_p[j].name] = j;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for ( std::size_t i = 0; i < subs_g.size(); ++i )
  {
    auto const it = index.find( subs_g[i].name );
    if ( it == index.end() )
      throw invariant_error( "scope '" + subs_g[i].name + "' has no counterpart in the other stage" );
    pairs.emplace_back( i, it->second );
    index.erase( it );
  }
  if ( !index.empty() )
    throw invariant_error( "scope '" + index.begin()->first + "' exists only in the other stage" );
  return pairs;
}

} // namespace pwrgraph
