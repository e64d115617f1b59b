#pragma once

#include <optional>
#include <vector>

#include "../core/types.hpp"
#include "../sim/simulator.hpp"

namespace pwrgraph
{

/*! \brief Per-cycle power of the three groups, in watts. */
struct GroupPower
{
  double combinational{ 0.0 };
  double register_{ 0.0 };
  double clock_tree{ 0.0 };

  double total() const { return combinational + register_ + clock_tree; }
  double operator[]( PowerGroup g ) const
  {
    return g == PowerGroup::combinational ? combinational : g == PowerGroup::register_ ? register_ : clock_tree;
  }
  double& operator[]( PowerGroup g )
  {
    return g == PowerGroup::combinational ? combinational : g == PowerGroup::register_ ? register_ : clock_tree;
  }
  GroupPower& operator+=( GroupPower const& o )
  {
    combinational += o.combinational;
    register_ += o.register_;
    clock_tree += o.clock_tree;
    return *this;
  }

  bool operator==( GroupPower const& ) const = default;
};

/*! \brief Analytic per-cycle power model.
 *
 * For every cell:
 *   P = (E_int * f + 1/2 V^2 C_load f) * toggle(out) + E_ck * f * active(clock pin) + leakage
 * with C_load = wire_cap(out) + sum of input_cap over the pins the output drives.
 * Units: pJ, fF, nW in the library; watts out. With `ideal_clock` the dynamic
 * terms of clock-tree cells are dropped (no clock network is modelled), which
 * is how stage-G netlists are evaluated by default.
 */
class PowerOracle
{
public:
  PowerOracle( Netlist const& nl, Library const& lib, std::optional<bool> ideal_clock = std::nullopt )
  {
    bool const ideal = ideal_clock.value_or( nl.stage != Stage::P );
    Connectivity const conn( nl );
    double const f = lib.frequency, v2 = lib.voltage * lib.voltage;
    terms_.reserve( nl.cells.size() );
    for ( auto const& c : nl.cells )
    {
      auto const& lc = lib.cell( c.lib_cell );
      double load = nl.nets[c.output_net].wire_cap;
      for ( auto const& s : conn.sinks[c.output_net] )
        load += lib.cell( nl.cells[s.cell].lib_cell ).input_cap;
      term t;
      t.group = group_of( lc.node_type );
      t.out = c.output_net;
      t.clk = c.clock_net;
      t.leak = lc.leakage * 1e-9;
      if ( !( ideal && t.group == PowerGroup::clock_tree ) )
      {
        t.per_toggle = lc.internal_energy * 1e-12 * f + 0.5 * v2 * load * 1e-15 * f;
        t.per_clock = c.clock_net ? lc.clock_pin_energy * 1e-12 * f : 0.0;
      }
      terms_.push_back( t );
    }
  }

  std::size_t size() const { return terms_.size(); }

  /*! \brief Power of one cell at one cycle. */
  double cell_power( CellId id, WaveTable const& w, std::size_t cycle ) const
  {
    auto const& t = terms_[id];
    double p = t.leak;
    if ( w.toggle( t.out, cycle ) )
      p += t.per_toggle;
    if ( t.clk && w.clock_active( *t.clk, cycle ) )
      p += t.per_clock;
    return p;
  }

  PowerGroup group( CellId id ) const { return terms_[id].group; }

  GroupPower at( WaveTable const& w, std::size_t cycle ) const
  {
    check( w, cycle );
    GroupPower g;
    for ( CellId id = 0; id < terms_.size(); ++id )
      g[terms_[id].group] += cell_power( id, w, cycle );
    return g;
  }

  /*! \brief Power of a subset of cells (e.g. one sub-module scope). */
  GroupPower at( WaveTable const& w, std::size_t cycle, std::vector<CellId> const& cells ) const
  {
    check( w, cycle );
    GroupPower g;
    for ( auto id : cells )
      g[terms_[id].group] += cell_power( id, w, cycle );
    return g;
  }

  std::vector<GroupPower> series( WaveTable const& w, std::vector<CellId> const& cells ) const
  {
    std::vector<GroupPower> out( w.n_cycles );
    for ( std::size_t c = 0; c < w.n_cycles; ++c )
      out[c] = at( w, c, cells );
    return out;
  }

  std::vector<GroupPower> series( WaveTable const& w ) const
  {
    std::vector<GroupPower> out( w.n_cycles );
    for ( std::size_t c = 0; c < w.n_cycles; ++c )
      out[c] = at( w, c );
    return out;
  }

private:
  struct term
  {
    PowerGroup group{ PowerGroup::combinational };
    NetId out{ 0 };
    std::optional<NetId> clk;
    double per_toggle{ 0.0 }, per_clock{ 0.0 }, leak{ 0.0 };
  };

  void check( WaveTable const& w, std::size_t cycle ) const
  {
    if ( cycle >= w.n_cycles )
      throw argument_error( "cycle " + std::to_string( cycle ) + " out of range (" + std::to_string( w.n_cycles ) +
                            " cycles simulated)" );
  }

  std::vector<term> terms_;
};

inline GroupPower power_oracle( Netlist const& nl, Library const& lib, WaveTable const& wave, std::size_t cycle )
{
  return PowerOracle( nl, lib ).at( wave, cycle );
}

} // namespace pwrgraph
