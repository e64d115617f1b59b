#pragma once

// Shared test fixtures: random combinational blocks with an independent
// reference evaluator, and small multi-design corpora.

#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <pwrgraph/core/liberty.hpp>
#include <pwrgraph/core/netlist_io.hpp>
#include <pwrgraph/forge/generator.hpp>
#include <pwrgraph/forge/layout.hpp>
#include <pwrgraph/forge/rewrite.hpp>
#include <pwrgraph/forge/workload.hpp>
#include <pwrgraph/segment/dataset.hpp>

namespace fixtures
{

using namespace pwrgraph;

/*! Truth of a fixture-library cell, written out per cell name. */
inline bool reference_eval( std::string const& cell, std::vector<bool> const& x )
{
  auto const& n = cell;
  if ( n == "INVX1" || n == "INVX4" )
    return !x[0];
  if ( n == "BUFX1" || n == "BUFX4" )
    return x[0];
  if ( n == "AND2X1" )
    return x[0] && x[1];
  if ( n == "AND3X1" )
    return x[0] && x[1] && x[2];
  if ( n == "OR2X1" )
    return x[0] || x[1];
  if ( n == "OR3X1" )
    return x[0] || x[1] || x[2];
  if ( n == "NAND2X1" )
    return !( x[0] && x[1] );
  if ( n == "NAND3X1" )
    return !( x[0] && x[1] && x[2] );
  if ( n == "NOR2X1" )
    return !( x[0] || x[1] );
  if ( n == "NOR3X1" )
    return !( x[0] || x[1] || x[2] );
  if ( n == "XOR2X1" )
    return x[0] != x[1];
  if ( n == "XNOR2X1" )
    return x[0] == x[1];
  if ( n == "MUX2X1" )
    return x[2] ? x[1] : x[0];
  if ( n == "AOI21X1" )
    return !( ( x[0] && x[1] ) || x[2] );
  if ( n == "AOI22X1" )
    return !( ( x[0] && x[1] ) || ( x[2] && x[3] ) );
  if ( n == "OAI21X1" )
    return !( ( x[0] || x[1] ) && x[2] );
  if ( n == "OAI22X1" )
    return !( ( x[0] || x[1] ) && ( x[2] || x[3] ) );
  if ( n == "FASX1" )
    return x[0] ^ x[1] ^ x[2];
  if ( n == "FACOX1" )
    return ( x[0] && x[1] ) || ( x[0] && x[2] ) || ( x[1] && x[2] );
  if ( n == "TIEHIX1" )
    return true;
  if ( n == "TIELOX1" )
    return false;
  throw std::runtime_error( "reference_eval: no reference for " + cell );
}

/*! A random acyclic block of combinational cells over `n_in` primary inputs. */
struct CombBlock
{
  struct Gate
  {
    std::string cell;
    std::vector<int> ins; ///< >= 0: earlier gate index; < 0: primary input -(i+1)
  };
  int n_in{ 0 };
  std::vector<Gate> gates;
  std::string verilog;

  /*! Values of every gate for one input vector. */
  std::vector<bool> evaluate( unsigned vec ) const
  {
    std::vector<bool> v( gates.size() );
    for ( std::size_t g = 0; g < gates.size(); ++g )
    {
      std::vector<bool> x;
      for ( auto i : gates[g].ins )
        x.push_back( i < 0 ? ( ( vec >> ( -i - 1 ) ) & 1u ) != 0 : v[static_cast<std::size_t>( i )] );
      v[g] = reference_eval( gates[g].cell, x );
    }
    return v;
  }
};

inline CombBlock random_comb_block( int n_in, int n_gates, std::uint64_t seed )
{
  static char const* const cells[] = { "INVX1",   "BUFX1",   "AND2X1",  "AND3X1", "OR2X1", "OR3X1",  "NAND2X1", "NAND3X1",
                                       "NOR2X1",  "NOR3X1",  "XOR2X1",  "XNOR2X1", "MUX2X1", "AOI21X1", "AOI22X1", "OAI21X1",
                                       "OAI22X1", "FASX1",   "FACOX1",  "TIEHIX1", "TIELOX1" };
  auto const& lib = fixture_library();
  std::mt19937_64 rng( seed );
  CombBlock b;
  b.n_in = n_in;
  std::ostringstream body;
  for ( int g = 0; g < n_gates; ++g )
  {
    CombBlock::Gate gate;
    gate.cell = cells[rng() % std::size( cells )];
    auto const& lc = lib.cell( gate.cell );
    for ( std::size_t k = 0; k < lc.inputs.size(); ++k )
    {
      auto const pick = static_cast<int>( rng() % static_cast<std::uint64_t>( n_in + g ) );
      gate.ins.push_back( pick < n_in ? -( pick + 1 ) : pick - n_in );
    }
    body << "  " << gate.cell << " u" << g << " (";
    for ( std::size_t k = 0; k < lc.inputs.size(); ++k )
    {
      auto const i = gate.ins[k];
      body << "." << lc.inputs[k] << "(" << ( i < 0 ? "x" + std::to_string( -i - 1 ) : "w" + std::to_string( i ) ) << "), ";
    }
    body << "." << lc.output << "(w" << g << "));\n";
    b.gates.push_back( std::move( gate ) );
  }
  std::ostringstream os;
  os << "module top (";
  for ( int i = 0; i < n_in; ++i )
    os << "x" << i << ", ";
  os << "y);\n";
  for ( int i = 0; i < n_in; ++i )
    os << "  input x" << i << ";\n";
  os << "  output y;\n";
  for ( int g = 0; g < n_gates; ++g )
    os << "  wire w" << g << ";\n";
  os << body.str() << "  BUFX1 yb (.A(w" << n_gates - 1 << "), .Y(y));\nendmodule\n";
  b.verilog = os.str();
  return b;
}

/*! Stimulus enumerating all 2^n input vectors of a block, one per cycle. */
inline Stimulus exhaustive_stimulus( int n_in )
{
  Stimulus s;
  s.n_cycles = std::size_t{ 1 } << n_in;
  for ( int i = 0; i < n_in; ++i )
  {
    s.inputs.push_back( "x" + std::to_string( i ) );
    std::vector<std::uint8_t> bits( s.n_cycles );
    for ( std::size_t c = 0; c < s.n_cycles; ++c )
      bits[c] = static_cast<std::uint8_t>( ( c >> i ) & 1u );
    s.bits.push_back( std::move( bits ) );
  }
  return s;
}

struct Corpus
{
  std::vector<DesignBundle> bundles;
  DatasetManifest manifest;
};

/*! `n_designs` generated designs through all three stages; the last `n_test` are held out. */
inline Corpus make_corpus( std::size_t n_designs, std::size_t n_test, std::size_t n_cells, std::size_t n_cycles, std::uint64_t seed )
{
  auto const& lib = fixture_library();
  Corpus c;
  std::vector<std::string> train, test;
  for ( std::size_t i = 0; i < n_designs; ++i )
  {
    GenParams p;
    p.n_cells = n_cells;
    p.seed = seed * 100 + i;
    auto g = gen_design( p, lib );
    auto gp = equiv_transform( g, lib, 30, p.seed );
    LayoutParams lp;
    lp.seed = p.seed;
    auto pn = layout_transform( g, lib, lp );
    auto stim = gen_workload( g, n_cycles, p.seed );
    auto const id = "d" + std::to_string( i );
    c.bundles.push_back( make_bundle( id, std::move( g ), std::move( gp ), std::move( pn ), lib, stim, n_cycles ) );
    ( i + n_test >= n_designs ? test : train ).push_back( id );
  }
  c.manifest = assemble_dataset( c.bundles, train, test, seed );
  return c;
}

} // namespace fixtures
