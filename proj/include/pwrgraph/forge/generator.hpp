#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "../core/topology.hpp"
#include "../core/types.hpp"
#include "../util/rng.hpp"

namespace pwrgraph
{

struct GenParams
{
  std::size_t n_cells{ 1000 };
  std::size_t fanout{ 3 };       ///< sub-modules per hierarchy level
  std::size_t levels{ 2 };       ///< hierarchy depth below the top
  double register_fraction{ 0.15 };
  std::size_t icg_count{ 4 };
  std::uint64_t seed{ 1 };
  std::string top{ "top" };
};

namespace detail
{

struct comb_choice
{
  CellFunction fn;
  double weight;
};

inline constexpr comb_choice comb_mix[] = {
    { CellFunction::inv, 10 }, { CellFunction::buf, 3 },  { CellFunction::and_, 8 },       { CellFunction::or_, 7 },
    { CellFunction::nand, 12 }, { CellFunction::nor, 10 }, { CellFunction::xor_, 6 },      { CellFunction::xnor, 4 },
    { CellFunction::mux, 7 },   { CellFunction::aoi, 8 },  { CellFunction::oai, 8 },       { CellFunction::adder_sum, 3 },
    { CellFunction::adder_carry, 3 } };

} // namespace detail

/*! \brief Generate a random hierarchical gate-level design (stage G).
 *
 * Leaf modules hold the logic; the top holds output buffers. Combinational
 * cells only read primary inputs, register outputs, tie cells and cells
 * created before them, so the register-cut graph is acyclic by construction.
 * Each ICG is enabled by its own primary input `en_<k>` and gates a bank of
 * registers in one leaf.
 */
inline Netlist gen_design( GenParams const& p, Library const& lib )
{
  if ( p.n_cells < 50 )
    throw argument_error( "gen_design: n_cells must be at least 50" );
  if ( !( p.register_fraction > 0.0 && p.register_fraction <= 0.5 ) )
    throw argument_error( "gen_design: register_fraction must lie in (0, 0.5]" );
  if ( p.fanout < 1 || p.levels < 1 )
    throw argument_error( "gen_design: fanout and levels must be at least 1" );
  std::size_t n_leaves = 1;
  for ( std::size_t l = 0; l < p.levels; ++l )
    n_leaves *= p.fanout;
  if ( n_leaves < 3 )
    throw argument_error( "gen_design: hierarchy must have at least 3 leaf modules" );
  if ( n_leaves > p.n_cells / 8 )
    throw argument_error( "gen_design: too many leaf modules for the requested cell count" );

  rng_t rng( p.seed );
  Netlist nl;
  nl.top = p.top;
  nl.stage = Stage::G;

  std::vector<std::string> leaves;
  {
    std::vector<std::string> frontier{ p.top };
    nl.hierarchy.push_back( p.top );
    for ( std::size_t l = 0; l < p.levels; ++l )
    {
      std::vector<std::string> next;
      for ( auto const& m : frontier )
        for ( std::size_t k = 0; k < p.fanout; ++k )
        {
          next.push_back( m + ( l == 0 ? ".m" : ".s" ) + std::to_string( k ) );
          nl.hierarchy.push_back( next.back() );
        }
      frontier = std::move( next );
    }
    leaves = frontier;
  }

  // cell budget: ~3% output buffers in the top, the rest spread over leaves with +-40% size variation
  std::size_t const n_po = std::max<std::size_t>( 4, p.n_cells / 40 );
  std::size_t const leaf_budget = p.n_cells - n_po;
  std::vector<double> w( leaves.size() );
  for ( auto& x : w )
    x = 0.6 + 0.8 * uniform01( rng );
  double const wsum = std::accumulate( w.begin(), w.end(), 0.0 );
  std::vector<std::size_t> leaf_cells( leaves.size() );
  std::size_t assigned = 0;
  for ( std::size_t i = 0; i < leaves.size(); ++i )
  {
    leaf_cells[i] = static_cast<std::size_t>( std::floor( leaf_budget * w[i] / wsum ) );
    assigned += leaf_cells[i];
  }
  for ( std::size_t i = 0; assigned < leaf_budget; i = ( i + 1 ) % leaves.size(), ++assigned )
    ++leaf_cells[i];

  std::size_t const total_regs = static_cast<std::size_t>( std::lround( p.register_fraction * leaf_budget ) );
  if ( total_regs == 0 )
    throw argument_error( "gen_design: register fraction yields zero registers" );

  // --- nets are named at the end, once every reader is known
  struct proto_net
  {
    std::string module; // driver module (or top for inputs)
    std::string name;   // fixed name for ports; empty otherwise
  };
  std::vector<proto_net> nets;
  auto new_net = [&]( std::string module, std::string fixed = {} ) {
    nets.push_back( { std::move( module ), std::move( fixed ) } );
    return static_cast<NetId>( nets.size() - 1 );
  };
  struct proto_cell
  {
    std::string path, lib;
    std::vector<NetId> in;
    NetId out;
    std::optional<NetId> clk;
  };
  std::vector<proto_cell> cells;

  auto pick_cell = [&]( CellFunction fn, std::size_t arity_hint ) -> LibCell const* {
    std::vector<LibCell const*> opts;
    for ( auto const& [_, c] : lib.cells )
      if ( c.function == fn )
        opts.push_back( &c );
    if ( opts.empty() )
      return nullptr;
    for ( auto const* c : opts )
      if ( c->inputs.size() == arity_hint )
        return c;
    return opts[uniform_index( rng, opts.size() )];
  };
  auto need = [&]( CellFunction fn ) {
    auto const* c = pick_cell( fn, 1 );
    if ( !c )
      throw argument_error( "gen_design: library lacks a cell for a required function" );
    return c;
  };

  NetId const clk = new_net( p.top, "clk" );
  std::size_t const n_pi = std::max<std::size_t>( 8, p.n_cells / 30 );
  std::vector<NetId> pis;
  for ( std::size_t i = 0; i < n_pi; ++i )
    pis.push_back( new_net( p.top, "in_" + std::to_string( i ) ) );
  std::vector<NetId> enables;
  for ( std::size_t i = 0; i < p.icg_count; ++i )
    enables.push_back( new_net( p.top, "en_" + std::to_string( i ) ) );

  // registers and ICGs first, so every module can read any register output
  std::vector<std::size_t> leaf_regs( leaves.size() );
  {

    for ( std::size_t i = 0; i < leaves.size(); ++i )
    {
      leaf_regs[i] = std::max<std::size_t>( 1, static_cast<std::size_t>( std::lround( total_regs * double( leaf_cells[i] ) / leaf_budget ) ) );

    }
  }
  std::vector<std::vector<std::size_t>> reg_cells( leaves.size() ); // indices into cells
  std::vector<std::vector<NetId>> reg_q( leaves.size() );
  std::vector<NetId> all_q;
  std::vector<std::size_t> used( leaves.size(), 0 );
  auto const* dff = need( CellFunction::dff );
  auto const* dffrs = pick_cell( CellFunction::dffrs, 3 );
  auto const* latch = pick_cell( CellFunction::latch, 1 );
  auto const* icg = pick_cell( CellFunction::icg, 1 );
  if ( p.icg_count > 0 && !icg )
    throw argument_error( "gen_design: library lacks an ICG cell" );
  for ( std::size_t i = 0; i < leaves.size(); ++i )
    for ( std::size_t r = 0; r < leaf_regs[i]; ++r )
    {
      double const u = uniform01( rng );
      LibCell const* lc = u < 0.12 && dffrs ? dffrs : u < 0.22 && latch ? latch : dff;
      auto const q = new_net( leaves[i] );
      cells.push_back( { leaves[i] + ".r" + std::to_string( r ), lc->name, {}, q, clk } );
      reg_cells[i].push_back( cells.size() - 1 );
      reg_q[i].push_back( q );
      all_q.push_back( q );
      ++used[i];
    }
  for ( std::size_t k = 0; k < p.icg_count; ++k )
  {
    auto const i = uniform_index( rng, leaves.size() );
    auto const gck = new_net( leaves[i] );
    cells.push_back( { leaves[i] + ".cg" + std::to_string( k ), icg->name, { enables[k] }, gck, clk } );
    ++used[i];
    // gate a random 40-80% bank of this leaf's registers that are still on the root clock
    std::vector<std::size_t> ungated;
    for ( auto idx : reg_cells[i] )
      if ( cells[idx].clk == clk )
        ungated.push_back( idx );
    shuffle_in_place( ungated, rng );
    auto const bank = static_cast<std::size_t>( std::ceil( ungated.size() * ( 0.4 + 0.4 * uniform01( rng ) ) ) );
    for ( std::size_t b = 0; b < bank && b < ungated.size(); ++b )
      cells[ungated[b]].clk = gck;
  }

  // per-leaf input ports drawn from the primary inputs
  std::vector<std::vector<NetId>> leaf_pis( leaves.size() );
  for ( std::size_t i = 0; i < leaves.size(); ++i )
  {
    auto pool = pis;
    shuffle_in_place( pool, rng );
    pool.resize( std::min<std::size_t>( pool.size(), 6 ) );
    leaf_pis[i] = pool;
  }

  double const mix_total = [] {
    double s = 0;
    for ( auto const& c : detail::comb_mix )
      s += c.weight;
    return s;
  }();
  std::vector<std::vector<NetId>> leaf_comb( leaves.size() );
  std::vector<NetId> all_comb;
  auto const* tie_hi = pick_cell( CellFunction::tie_high, 0 );
  auto const* tie_lo = pick_cell( CellFunction::tie_low, 0 );

  for ( std::size_t i = 0; i < leaves.size(); ++i )
  {
    auto const& mod = leaves[i];
    std::size_t idx = 0;
    std::vector<NetId> ties;
    if ( tie_hi && tie_lo && used[i] + 2 < leaf_cells[i] )
    {
      for ( auto const* t : { tie_hi, tie_lo } )
      {
        auto const o = new_net( mod );
        cells.push_back( { mod + ".t" + std::to_string( idx++ ), t->name, {}, o, std::nullopt } );
        ties.push_back( o );
        ++used[i];
      }
    }
    auto source = [&]() -> NetId {
      auto const& local = leaf_comb[i];
      double const u = uniform01( rng );
      if ( u < 0.55 && !local.empty() )
      {
        auto const window = std::min<std::size_t>( local.size(), 24 );
        return local[local.size() - 1 - uniform_index( rng, window )];
      }
      if ( u < 0.78 && !reg_q[i].empty() )
        return reg_q[i][uniform_index( rng, reg_q[i].size() )];
      if ( u < 0.90 )
        return leaf_pis[i][uniform_index( rng, leaf_pis[i].size() )];
      if ( u < 0.92 && !ties.empty() )
        return ties[uniform_index( rng, ties.size() )];
      if ( u < 0.96 && !all_comb.empty() )
        return all_comb[uniform_index( rng, all_comb.size() )];
      return all_q[uniform_index( rng, all_q.size() )];
    };
    while ( used[i] < leaf_cells[i] )
    {
      double u = uniform01( rng ) * mix_total;
      CellFunction fn = detail::comb_mix[0].fn;
      for ( auto const& c : detail::comb_mix )
      {
        if ( u < c.weight )
        {
          fn = c.fn;
          break;
        }
        u -= c.weight;
      }
      auto const* lc = pick_cell( fn, 2 + uniform_index( rng, 3 ) );
      if ( !lc )
        continue;
      std::vector<NetId> ins;
      for ( std::size_t k = 0; k < lc->inputs.size(); ++k )
        ins.push_back( source() );
      auto const o = new_net( mod );
      cells.push_back( { mod + ".g" + std::to_string( idx++ ), lc->name, std::move( ins ), o, std::nullopt } );
      leaf_comb[i].push_back( o );
      all_comb.push_back( o );
      ++used[i];
    }
    // register data inputs come from this leaf's logic
    for ( auto ridx : reg_cells[i] )
    {
      auto& rc = cells[ridx];
      auto const& lc = lib.cell( rc.lib );
      for ( std::size_t k = 0; k < lc.inputs.size(); ++k )
        rc.in.push_back( leaf_comb[i].empty() ? leaf_pis[i][0] : leaf_comb[i][uniform_index( rng, leaf_comb[i].size() )] );
    }
  }

  // output buffers in the top module
  auto const* buf = need( CellFunction::buf );
  std::vector<NetId> pos;
  for ( std::size_t k = 0; k < n_po; ++k )
  {
    auto const i = uniform_index( rng, leaves.size() );
    auto const src = uniform01( rng ) < 0.7 && !leaf_comb[i].empty() ? leaf_comb[i][uniform_index( rng, leaf_comb[i].size() )]
                                                                      : reg_q[i][uniform_index( rng, reg_q[i].size() )];
    auto const o = new_net( p.top, "out_" + std::to_string( k ) );
    cells.push_back( { p.top + ".ob" + std::to_string( k ), buf->name, { src }, o, std::nullopt } );
    pos.push_back( o );
  }

  // name each net after the closest module that sees all of its pins
  std::vector<std::vector<std::string>> users( nets.size() );
  for ( auto const& c : cells )
  {
    auto const m = std::string( module_of( c.path ) );
    for ( auto n : c.in )
      users[n].push_back( m );
    users[c.out].push_back( m );
    if ( c.clk )
      users[*c.clk].push_back( m );
  }
  std::size_t serial = 0;
  for ( NetId n = 0; n < nets.size(); ++n )
  {
    Net net;
    net.id = n;
    if ( !nets[n].name.empty() )
      net.name = nets[n].name;
    else
    {
      std::string lca = users[n].empty() ? nets[n].module : users[n].front();
      for ( auto const& m : users[n] )
        while ( !path_under( m, lca ) )
          lca = std::string( module_of( lca ) );
      auto const rel = lca == p.top ? std::string{} : lca.substr( p.top.size() + 1 ) + ".";
      net.name = rel + "n" + std::to_string( serial++ );
    }
    nl.nets.push_back( std::move( net ) );
  }
  for ( std::size_t k = 0; k < cells.size(); ++k )
  {
    auto& c = cells[k];
    nl.cells.push_back( { static_cast<CellId>( k ), c.path, c.lib, c.in, c.out, c.clk } );
  }
  nl.primary_inputs.push_back( clk );
  nl.primary_inputs.insert( nl.primary_inputs.end(), pis.begin(), pis.end() );
  nl.primary_inputs.insert( nl.primary_inputs.end(), enables.begin(), enables.end() );
  nl.primary_outputs = pos;
  nl.clock_root = clk;
  canonicalize( nl );
  validate( nl, lib );
  return nl;
}

} // namespace pwrgraph
