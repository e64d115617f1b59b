#pragma once

#include <cmath>
#include <cstdint>

#include "../nn/params.hpp"

namespace pwrgraph
{

struct AdamState
{
  ParamSet m, v;
  std::uint64_t step{ 0 };
  double lr{ 1e-4 };
  double beta1{ 0.9 }, beta2{ 0.999 }, eps{ 1e-8 };

  static AdamState for_params( ParamSet const& p, double lr = 1e-4 )
  {
    AdamState s;
    s.m = p.zeros_like();
    s.v = p.zeros_like();
    s.lr = lr;
    return s;
  }

  bool operator==( AdamState const& ) const = default;
};

/*! \brief Bias-corrected Adam update of `w` in place. Throws on non-finite gradients. */
inline void adam_step( ParamSet& w, ParamSet const& g, AdamState& s )
{
  w.check_shape( g );
  w.check_shape( s.m );
  for ( std::size_t i = 0; i < g.size(); ++i )
    if ( !g[i].allFinite() )
      throw invariant_error( "non-finite gradient for parameter '" + g.names[i] + "' at step " + std::to_string( s.step + 1 ) );
  ++s.step;
  double const c1 = 1.0 - std::pow( s.beta1, static_cast<double>( s.step ) );
  double const c2 = 1.0 - std::pow( s.beta2, static_cast<double>( s.step ) );
  for ( std::size_t i = 0; i < g.size(); ++i )
  {
    s.m[i] = s.beta1 * s.m[i] + ( 1.0 - s.beta1 ) * g[i];
    s.v[i] = s.beta2 * s.v[i] + ( 1.0 - s.beta2 ) * g[i].cwiseAbs2();
    w[i].array() -= s.lr * ( s.m[i].array() / c1 ) / ( ( s.v[i].array() / c2 ).sqrt() + s.eps );
  }
}

} // namespace pwrgraph
