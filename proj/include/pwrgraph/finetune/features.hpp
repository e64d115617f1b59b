#pragma once

#include <vector>

#include <Eigen/Dense>

#include "../core/types.hpp"
#include "../segment/sample.hpp"

namespace pwrgraph
{

/*! \brief Fine-tuning inputs of one stage-G sample at one cycle. */
struct GroupFeatures
{
  Eigen::RowVectorXd embedding;
  double n_comb{ 0 }, i_comb{ 0 }, c_comb{ 0 }; ///< count, pJ, fF
  double n_reg{ 0 }, i_reg{ 0 }, c_reg{ 0 };

  std::vector<double> clock_tree_row() const { return { embedding.data(), embedding.data() + embedding.size() }; }
  std::vector<double> comb_row() const
  {
    auto r = clock_tree_row();
    r.insert( r.end(), { n_comb, i_comb, c_comb } );
    return r;
  }
  std::vector<double> reg_row() const
  {
    auto r = clock_tree_row();
    r.insert( r.end(), { n_reg, i_reg, c_reg } );
    return r;
  }
};

/*! \brief Output load of every net: wire_cap + input_cap of each pin it drives (fF). */
inline std::vector<double> net_load_caps( Netlist const& nl, Library const& lib )
{
  std::vector<double> load( nl.nets.size(), 0.0 );
  for ( auto const& n : nl.nets )
    load[n.id] = n.wire_cap;
  for ( auto const& c : nl.cells )
  {
    double const cap = lib.cell( c.lib_cell ).input_cap;
    for ( auto n : c.input_nets )
      load[n] += cap;
    if ( c.clock_net )
      load[*c.clock_net] += cap;
  }
  return load;
}

/*! \brief Group counts and toggle-weighted internal energy / load sums of a sample. */
inline GroupFeatures extract_group_features( SubModuleSample const& s, Eigen::RowVectorXd const& embedding,
                                             std::vector<double> const& net_load )
{
  GroupFeatures f;
  f.embedding = embedding;
  auto const& g = *s.graph;
  for ( std::size_t i = 0; i < g.size(); ++i )
  {
    auto const grp = group_of( g.node_type[i] );
    if ( grp == PowerGroup::clock_tree )
      continue;
    double const t = s.features( static_cast<Eigen::Index>( i ), feature_toggle );
    double const e = g.internal_energy[i] * t;
    double const c = net_load.at( g.output_net[i] ) * t;
    if ( grp == PowerGroup::combinational )
    {
      f.n_comb += 1;
      f.i_comb += e;
      f.c_comb += c;
    }
    else
    {
      f.n_reg += 1;
      f.i_reg += e;
      f.c_reg += c;
    }
  }
  return f;
}

inline GroupFeatures extract_group_features( SubModuleSample const& s, Eigen::RowVectorXd const& embedding, Netlist const& nl,
                                             Library const& lib )
{
  return extract_group_features( s, embedding, net_load_caps( nl, lib ) );
}

} // namespace pwrgraph
