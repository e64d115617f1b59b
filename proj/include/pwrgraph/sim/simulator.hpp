#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "../core/classify.hpp"
#include "../core/topology.hpp"
#include "../core/types.hpp"
#include "../core/vcd.hpp"
#include "../util/rng.hpp"

namespace pwrgraph
{

/*! \brief Per-cycle bit streams for the primary inputs (the clock root is never listed). */
struct Stimulus
{
  std::vector<std::string> inputs;
  std::vector<std::vector<std::uint8_t>> bits; ///< bits[input][cycle]
  std::size_t n_cycles{ 0 };
  std::uint64_t seed{ 0 };

  bool operator==( Stimulus const& ) const = default;
};

/*! \brief Simulated values and toggles of every net, cycle-major.
 *
 * For clock nets (the clock root and every CK/ICG output) `toggle` holds the
 * clock-active bit of the cycle and `value` is always 0.
 */
struct WaveTable
{
  std::size_t n_nets{ 0 };
  std::size_t n_cycles{ 0 };
  std::vector<std::uint8_t> values;
  std::vector<std::uint8_t> toggles;
  std::vector<std::uint8_t> clock_net; ///< per net: 1 if it carries a clock

  std::uint8_t value( NetId n, std::size_t c ) const { return values[c * n_nets + n]; }
  std::uint8_t toggle( NetId n, std::size_t c ) const { return toggles[c * n_nets + n]; }
  std::uint8_t clock_active( NetId n, std::size_t c ) const { return clock_net[n] ? toggle( n, c ) : 0; }

  ToggleTrace trace() const
  {
    ToggleTrace t;
    t.n_cycles = n_cycles;
    t.bits.assign( n_nets, std::vector<std::uint8_t>( n_cycles ) );
    for ( std::size_t c = 0; c < n_cycles; ++c )
      for ( NetId n = 0; n < n_nets; ++n )
        t.bits[n][c] = toggle( n, c );
    return t;
  }

  bool operator==( WaveTable const& ) const = default;
};

/*! \brief Cycle-accurate two-valued simulator compiled for one netlist.
 *
 * Each cycle: (1) clock activity propagates from the root through CK cells,
 * ICG outputs are active when their parent clock is active and the enable
 * captured at the previous edge was 1; (2) registers whose clock is active
 * load their next state from the previous cycle's values; (3) combinational
 * cells settle in topological order. All nets start at 0 before cycle 0.
 */
class Simulator
{
public:
  Simulator( Netlist const& nl, Library const& lib ) : nl_( nl )
  {
    Connectivity const conn( nl );
    comb_order_ = combinational_order( nl, lib, conn );
    clock_order_ = clock_order( nl, lib, conn );
    fn_.resize( nl.cells.size() );
    for ( auto const& c : nl.cells )
    {
      auto const& lc = lib.cell( c.lib_cell );
      fn_[c.id] = lc.function;
      if ( is_register( lc.node_type ) )
        registers_.push_back( c.id );
    }
    is_clock_.assign( nl.nets.size(), 0 );
    if ( nl.clock_root )
      is_clock_[*nl.clock_root] = 1;
    for ( auto id : clock_order_ )
    {
      auto const& c = nl.cells[id];
      if ( !is_clock_[*c.clock_net] )
        throw invariant_error( "clock pin of '" + c.instance_path + "' is not driven by the clock network" );
      is_clock_[c.output_net] = 1;
    }
    for ( auto id : registers_ )
      if ( !is_clock_[*nl.cells[id].clock_net] )
        throw invariant_error( "register '" + nl.cells[id].instance_path + "' is not clocked by the clock network" );
    for ( auto const& c : nl.cells )
      for ( auto n : c.input_nets )
        if ( is_clock_[n] )
          throw invariant_error( "clock net '" + nl.nets[n].name + "' drives data pin of '" + c.instance_path + "'" );
  }

  WaveTable run( Stimulus const& stim, std::size_t n_cycles ) const
  {
    auto const& nl = nl_;
    std::vector<std::pair<NetId, std::vector<std::uint8_t> const*>> drive;
    {
      std::unordered_map<std::string, std::size_t> by_name;
      for ( std::size_t i = 0; i < stim.inputs.size(); ++i )
        by_name.emplace( stim.inputs[i], i );
      for ( auto pi : nl.primary_inputs )
      {
        if ( nl.clock_root == pi )
          continue;
        auto const it = by_name.find( nl.nets[pi].name );
        if ( it == by_name.end() )
          throw argument_error( "stimulus does not cover primary input '" + nl.nets[pi].name + "'" );
        auto const& bits = stim.bits[it->second];
        if ( bits.size() < n_cycles )
          throw argument_error( "stimulus for '" + nl.nets[pi].name + "' is shorter than " +
                                std::to_string( n_cycles ) + " cycles" );
        for ( std::size_t c = 0; c < n_cycles; ++c )
          if ( bits[c] > 1 )
            throw argument_error( "X-valued stimulus on '" + nl.nets[pi].name + "' at cycle " + std::to_string( c ) +
                                  " (only 0/1 supported)" );
        drive.emplace_back( pi, &bits );
      }
      for ( auto const& name : stim.inputs )
      {
        auto const n = nl.find_net( name );
        if ( !n || std::find( nl.primary_inputs.begin(), nl.primary_inputs.end(), *n ) == nl.primary_inputs.end() )
          throw argument_error( "stimulus drives '" + name + "', which is not a primary input" );
      }
    }

    auto const n_nets = nl.nets.size();
    WaveTable w;
    w.n_nets = n_nets;
    w.n_cycles = n_cycles;
    w.values.assign( n_nets * n_cycles, 0 );
    w.toggles.assign( n_nets * n_cycles, 0 );
    w.clock_net = is_clock_;

    std::vector<std::uint8_t> prev( n_nets, 0 ), cur( n_nets, 0 ), active( n_nets, 0 );
    std::vector<std::uint8_t> reg_state( nl.cells.size(), 0 ); // register Q / ICG captured enable
    std::array<std::uint8_t, 8> in{};
    struct pins
    {
      std::array<std::uint8_t, 8> const& a;
      std::size_t n;
      std::size_t size() const { return n; }
      std::uint8_t operator[]( std::size_t i ) const { return a[i]; }
    };

    for ( std::size_t c = 0; c < n_cycles; ++c )
    {
      for ( auto const& [pi, bits] : drive )
        cur[pi] = ( *bits )[c];

      if ( nl.clock_root )
        active[*nl.clock_root] = 1;
      for ( auto id : clock_order_ )
      {
        auto const& cell = nl.cells[id];
        auto const parent = active[*cell.clock_net];
        if ( fn_[id] == CellFunction::icg )
        {
          if ( c > 0 && parent )
            reg_state[id] = prev[cell.input_nets[0]];
          active[cell.output_net] = parent && reg_state[id];
        }
        else
          active[cell.output_net] = parent;
      }

      for ( auto id : registers_ )
      {
        auto const& cell = nl.cells[id];
        if ( c > 0 && active[*cell.clock_net] )
        {
          auto const d = prev[cell.input_nets[0]];
          if ( fn_[id] == CellFunction::dffrs )
          {
            auto const r = prev[cell.input_nets[1]], s = prev[cell.input_nets[2]];
            reg_state[id] = s ? 1 : ( r ? 0 : d );
          }
          else
            reg_state[id] = d;
        }
        cur[cell.output_net] = reg_state[id];
      }

      for ( auto id : comb_order_ )
      {
        auto const& cell = nl.cells[id];
        auto const k = cell.input_nets.size();
        for ( std::size_t i = 0; i < k; ++i )
          in[i] = cur[cell.input_nets[i]];
        cur[cell.output_net] = eval_function( fn_[id], pins{ in, k } ) ? 1 : 0;
      }

      auto* vrow = &w.values[c * n_nets];
      auto* trow = &w.toggles[c * n_nets];
      for ( NetId n = 0; n < n_nets; ++n )
      {
        if ( is_clock_[n] )
          trow[n] = active[n];
        else
        {
          vrow[n] = cur[n];
          trow[n] = cur[n] ^ prev[n];
        }
      }
      std::swap( prev, cur );
      cur = prev; // nets without a driver keep their value
    }
    return w;
  }

private:
  Netlist const& nl_;
  std::vector<CellId> comb_order_, clock_order_, registers_;
  std::vector<CellFunction> fn_;
  std::vector<std::uint8_t> is_clock_;
};

inline WaveTable simulate( Netlist const& nl, Library const& lib, Stimulus const& stim, std::size_t n_cycles )
{
  return Simulator( nl, lib ).run( stim, n_cycles );
}

/*! \brief Uniform random 0/1 stimulus for every non-clock primary input. */
inline Stimulus random_stimulus( Netlist const& nl, std::size_t n_cycles, std::uint64_t seed )
{
  Stimulus s;
  s.n_cycles = n_cycles;
  s.seed = seed;
  rng_t rng( seed );
  for ( auto pi : nl.primary_inputs )
  {
    if ( nl.clock_root == pi )
      continue;
    s.inputs.push_back( nl.nets[pi].name );
    std::vector<std::uint8_t> bits( n_cycles );
    for ( auto& b : bits )
      b = static_cast<std::uint8_t>( rng() & 1u );
    s.bits.push_back( std::move( bits ) );
  }
  return s;
}

namespace detail
{
inline std::string vcd_code( std::size_t i )
{
  std::string s;
  do
  {
    s += static_cast<char>( 33 + i % 94 );
    i /= 94;
  } while ( i );
  return s;
}
} // namespace detail

/*! \brief Emit the VCD subset read by parse_vcd.
 *
 * Data nets change at the start of a cycle; an active clock net pulses
 * high at the start of the cycle and low at mid-period.
 */
inline std::string write_vcd( Netlist const& nl, WaveTable const& w, std::uint64_t clock_period )
{
  if ( clock_period < 2 )
    throw argument_error( "clock period must be at least 2 time units" );
  std::ostringstream os;
  os << "$timescale 1ns $end\n$scope module " << nl.top << " $end\n";
  for ( auto const& n : nl.nets )
    os << "$var wire 1 " << detail::vcd_code( n.id ) << ' ' << n.name << " $end\n";
  os << "$upscope $end\n$enddefinitions $end\n";
  for ( std::size_t c = 0; c < w.n_cycles; ++c )
  {
    os << '#' << c * clock_period << '\n';
    if ( c == 0 )
      os << "$dumpvars\n";
    bool any_clock = false;
    for ( auto const& n : nl.nets )
    {
      if ( w.clock_net[n.id] )
      {
        if ( w.toggle( n.id, c ) )
        {
          os << '1' << detail::vcd_code( n.id ) << '\n';
          any_clock = true;
        }
        continue;
      }
      auto const v = w.value( n.id, c );
      auto const before = c == 0 ? 0 : w.value( n.id, c - 1 );
      if ( v != before )
        os << static_cast<char>( '0' + v ) << detail::vcd_code( n.id ) << '\n';
    }
    if ( c == 0 )
      os << "$end\n";
    if ( any_clock )
    {
      os << '#' << c * clock_period + clock_period / 2 << '\n';
      for ( auto const& n : nl.nets )
        if ( w.clock_net[n.id] && w.toggle( n.id, c ) )
          os << '0' << detail::vcd_code( n.id ) << '\n';
    }
  }
  os << '#' << w.n_cycles * clock_period << '\n';
  return os.str();
}

/*! \brief Sparse toggle CSV: one `net,cycle,bit` row per toggle (absent rows are 0). */
inline std::string write_toggle_csv( Netlist const& nl, WaveTable const& w )
{
  std::ostringstream os;
  os << "net,cycle,bit\n";
  for ( auto const& n : nl.nets )
    for ( std::size_t c = 0; c < w.n_cycles; ++c )
      if ( w.toggle( n.id, c ) )
        os << n.name << ',' << c << ",1\n";
  return os.str();
}

} // namespace pwrgraph
