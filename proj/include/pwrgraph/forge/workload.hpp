#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "../sim/simulator.hpp"
#include "../util/rng.hpp"
#include "../util/strings.hpp"

namespace pwrgraph
{

/*! \brief Synthetic workload for a netlist.
 *
 * Ordinary inputs flip with a per-input probability drawn from [0.05, 0.5].
 * Clock-gate enables (inputs named `en_*`) hold their value for bursts of
 * 8 to 40 cycles so that gated banks switch on and off over the trace.
 */
inline Stimulus gen_workload( Netlist const& nl, std::size_t n_cycles, std::uint64_t seed )
{
  if ( n_cycles == 0 )
    throw argument_error( "gen_workload: n_cycles must be at least 1" );
  Stimulus s;
  s.n_cycles = n_cycles;
  s.seed = seed;
  std::uint64_t k = 0;
  for ( auto pi : nl.primary_inputs )
  {
    if ( nl.clock_root == pi )
      continue;
    auto const& name = nl.nets[pi].name;
    rng_t rng( derive_seed( seed, fnv1a( name ) ^ k++ ) );
    std::vector<std::uint8_t> bits( n_cycles );
    std::uint8_t v = static_cast<std::uint8_t>( rng() & 1u );
    if ( starts_with( name, "en_" ) )
    {
      std::size_t c = 0;
      while ( c < n_cycles )
      {
        auto const len = 8 + uniform_index( rng, 33 );
        for ( std::size_t i = 0; i < len && c < n_cycles; ++i )
          bits[c++] = v;
        v ^= 1u;
      }
    }
    else
    {
      double const activity = 0.05 + 0.45 * uniform01( rng );
      for ( auto& b : bits )
      {
        if ( uniform01( rng ) < activity )
          v ^= 1u;
        b = v;
      }
    }
    s.inputs.push_back( name );
    s.bits.push_back( std::move( bits ) );
  }
  return s;
}

} // namespace pwrgraph
