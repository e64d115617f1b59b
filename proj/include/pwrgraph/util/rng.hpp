#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace pwrgraph
{

using rng_t = std::mt19937_64;

/*! \brief Derive an independent stream seed from a base seed and a salt (splitmix64 finalizer). */
inline std::uint64_t derive_seed( std::uint64_t seed, std::uint64_t salt )
{
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * ( salt + 1u );
  z = ( z ^ ( z >> 30 ) ) * 0xbf58476d1ce4e5b9ull;
  z = ( z ^ ( z >> 27 ) ) * 0x94d049bb133111ebull;
  return z ^ ( z >> 31 );
}

inline double uniform01( rng_t& rng )
{
  return std::uniform_real_distribution<double>( 0.0, 1.0 )( rng );
}

inline std::size_t uniform_index( rng_t& rng, std::size_t n )
{
  return std::uniform_int_distribution<std::size_t>( 0, n - 1 )( rng );
}

/*! \brief Fisher-Yates shuffle with our own index draws, so results do not depend on std::shuffle internals. */
template<typename T>
void shuffle_in_place( std::vector<T>& v, rng_t& rng )
{
  for ( std::size_t i = v.size(); i > 1; --i )
  {
    std::swap( v[i - 1], v[uniform_index( rng, i )] );
  }
}

} // namespace pwrgraph
