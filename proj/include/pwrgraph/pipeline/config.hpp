#pragma once

#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "../finetune/gbrt.hpp"
#include "../forge/generator.hpp"
#include "../forge/layout.hpp"
#include "../nn/encoder.hpp"
#include "../pretrain/trainer.hpp"
#include "../util/error.hpp"
#include "../util/strings.hpp"

namespace pwrgraph
{

/*! \brief Bad configuration key or value; the CLI maps it to exit status 2. */
class config_error : public error
{
public:
  using error::error;
};

/*! \brief Every knob of a pipeline run. Keys are listed in `config_keys()`. */
struct RunConfig
{
  std::string out_dir{ "out" };
  std::string library{ "builtin" }; ///< liberty-lite path or "builtin"

  std::size_t designs{ 6 };
  std::size_t test_designs{ 2 }; ///< the last N designs are held out
  GenParams gen;
  double size_spread{ 0.25 }; ///< design i has n_cells * (1 +- spread)
  std::size_t equiv_rewrites{ 60 };
  LayoutParams layout;
  std::size_t cycles{ 200 };
  std::uint64_t workload_seed{ 1 };
  std::size_t min_cells{ 20 };

  EncoderConfig encoder;
  PretrainConfig pretrain;
  GbrtConfig finetune;

  std::vector<std::size_t> bench_sizes{ 1000, 2000, 4000, 8000, 16000, 32000 };
  std::size_t bench_repeats{ 3 };
};

namespace detail
{

struct config_key
{
  std::string name, doc;
  std::function<void( RunConfig&, std::string const& )> set;
  std::function<std::string( RunConfig const& )> get;
};

inline std::size_t parse_count( std::string const& key, std::string const& v )
{
  std::size_t pos = 0;
  unsigned long long x = 0;
  try
  {
    x = std::stoull( v, &pos );
  }
  catch ( std::exception const& )
  {
    pos = 0;
  }
  if ( pos == 0 || pos != v.size() || v[0] == '-' )
    throw config_error( "config key '" + key + "': expected a non-negative integer, got '" + v + "'" );
  return static_cast<std::size_t>( x );
}

inline double parse_real( std::string const& key, std::string const& v )
{
  double x = 0;
  if ( !parse_double( v, x ) )
    throw config_error( "config key '" + key + "': expected a number, got '" + v + "'" );
  return x;
}

inline bool parse_bool( std::string const& key, std::string const& v )
{
  if ( v == "true" || v == "1" )
    return true;
  if ( v == "false" || v == "0" )
    return false;
  throw config_error( "config key '" + key + "': expected true/false, got '" + v + "'" );
}

template<typename T, typename Get>
config_key count_key( std::string name, std::string doc, Get get )
{
  return { name, std::move( doc ), [=]( RunConfig& c, std::string const& v ) { get( c ) = static_cast<T>( parse_count( name, v ) ); },
           [=]( RunConfig const& c ) { return std::to_string( get( const_cast<RunConfig&>( c ) ) ); } };
}

template<typename Get>
config_key real_key( std::string name, std::string doc, Get get )
{
  return { name, std::move( doc ), [=]( RunConfig& c, std::string const& v ) { get( c ) = parse_real( name, v ); },
           [=]( RunConfig const& c ) { return format_double( get( const_cast<RunConfig&>( c ) ) ); } };
}

template<typename Get>
config_key bool_key( std::string name, std::string doc, Get get )
{
  return { name, std::move( doc ), [=]( RunConfig& c, std::string const& v ) { get( c ) = parse_bool( name, v ); },
           [=]( RunConfig const& c ) { return std::string( get( const_cast<RunConfig&>( c ) ) ? "true" : "false" ); } };
}

template<typename Get>
config_key string_key( std::string name, std::string doc, Get get )
{
  return { name, std::move( doc ),
           [=]( RunConfig& c, std::string const& v ) {
             if ( v.empty() )
               throw config_error( "config key '" + name + "': empty value" );
             get( c ) = v;
           },
           [=]( RunConfig const& c ) { return get( const_cast<RunConfig&>( c ) ); } };
}

} // namespace detail

/*! \brief The configuration schema, in file order. */
inline std::vector<detail::config_key> const& config_keys()
{
  using namespace detail;
  using C = RunConfig;
  static std::vector<config_key> const keys = {
      string_key( "out_dir", "artifact root (overridden by $PWRGRAPH_OUT)", []( C& c ) -> auto& { return c.out_dir; } ),
      string_key( "library", "liberty-lite file, or 'builtin'", []( C& c ) -> auto& { return c.library; } ),
      count_key<std::size_t>( "designs", "number of generated designs", []( C& c ) -> auto& { return c.designs; } ),
      count_key<std::size_t>( "test_designs", "held-out designs (taken from the end)", []( C& c ) -> auto& { return c.test_designs; } ),
      count_key<std::size_t>( "gen.n_cells", "cells per design (before spread)", []( C& c ) -> auto& { return c.gen.n_cells; } ),
      real_key( "gen.size_spread", "relative size spread across designs", []( C& c ) -> auto& { return c.size_spread; } ),
      count_key<std::size_t>( "gen.fanout", "sub-modules per module", []( C& c ) -> auto& { return c.gen.fanout; } ),
      count_key<std::size_t>( "gen.levels", "hierarchy depth", []( C& c ) -> auto& { return c.gen.levels; } ),
      real_key( "gen.register_fraction", "share of sequential cells", []( C& c ) -> auto& { return c.gen.register_fraction; } ),
      count_key<std::size_t>( "gen.icg_count", "clock gates per design", []( C& c ) -> auto& { return c.gen.icg_count; } ),
      count_key<std::uint64_t>( "gen.seed", "design generator seed", []( C& c ) -> auto& { return c.gen.seed; } ),
      count_key<std::size_t>( "transform.rewrites", "equivalence rewrites for stage G+", []( C& c ) -> auto& { return c.equiv_rewrites; } ),
      count_key<std::size_t>( "layout.max_fanout", "buffer trees above this fanout", []( C& c ) -> auto& { return c.layout.max_fanout; } ),
      count_key<std::size_t>( "layout.branching", "clock-tree branching factor", []( C& c ) -> auto& { return c.layout.branching; } ),
      real_key( "layout.wire_cap_per_fanout", "fF of wire per driven pin", []( C& c ) -> auto& { return c.layout.wire_cap_per_fanout; } ),
      count_key<std::size_t>( "layout.rewrites", "post-layout equivalence rewrites", []( C& c ) -> auto& { return c.layout.rewrites; } ),
      count_key<std::uint64_t>( "layout.seed", "layout seed", []( C& c ) -> auto& { return c.layout.seed; } ),
      count_key<std::size_t>( "sim.cycles", "workload length", []( C& c ) -> auto& { return c.cycles; } ),
      count_key<std::uint64_t>( "sim.seed", "workload seed", []( C& c ) -> auto& { return c.workload_seed; } ),
      count_key<std::size_t>( "segment.min_cells", "minimum cells per scope", []( C& c ) -> auto& { return c.min_cells; } ),
      count_key<std::size_t>( "encoder.embed_dim", "embedding width d", []( C& c ) -> auto& { return c.encoder.embed_dim; } ),
      count_key<std::size_t>( "encoder.mp_layers", "message-passing layers", []( C& c ) -> auto& { return c.encoder.mp_layers; } ),
      real_key( "encoder.beta", "attention mix", []( C& c ) -> auto& { return c.encoder.beta; } ),
      count_key<std::uint64_t>( "encoder.seed", "weight initialization seed", []( C& c ) -> auto& { return c.encoder.seed; } ),
      count_key<std::size_t>( "pretrain.epochs", "pre-training epochs", []( C& c ) -> auto& { return c.pretrain.epochs; } ),
      count_key<std::size_t>( "pretrain.batch_size", "items per batch", []( C& c ) -> auto& { return c.pretrain.batch_size; } ),
      real_key( "pretrain.lr", "Adam learning rate", []( C& c ) -> auto& { return c.pretrain.lr; } ),
      real_key( "pretrain.tau", "InfoNCE temperature", []( C& c ) -> auto& { return c.pretrain.tau; } ),
      real_key( "pretrain.mask_ratio", "share of nodes masked per kind", []( C& c ) -> auto& { return c.pretrain.mask_ratio; } ),
      bool_key( "pretrain.size_log2", "size target on log2 scale", []( C& c ) -> auto& { return c.pretrain.size_log2; } ),
      bool_key( "pretrain.stop_grad_p", "no gradient through stage-P embeddings", []( C& c ) -> auto& { return c.pretrain.stop_grad_p; } ),
      count_key<std::size_t>( "pretrain.max_batches_per_epoch", "0 = full pass", []( C& c ) -> auto& { return c.pretrain.max_batches_per_epoch; } ),
      count_key<std::uint64_t>( "pretrain.seed", "batching and masking seed", []( C& c ) -> auto& { return c.pretrain.seed; } ),
      count_key<std::size_t>( "finetune.n_estimators", "trees per group model", []( C& c ) -> auto& { return c.finetune.n_estimators; } ),
      count_key<std::size_t>( "finetune.max_depth", "tree depth", []( C& c ) -> auto& { return c.finetune.max_depth; } ),
      real_key( "finetune.shrinkage", "boosting learning rate", []( C& c ) -> auto& { return c.finetune.shrinkage; } ),
      config_key{ "bench.sizes", "comma-separated node counts for the encode scaling run",
                  []( C& c, std::string const& v ) {
                    std::vector<std::size_t> sizes;
                    for ( auto const& part : split( v, ',' ) )
                      sizes.push_back( parse_count( "bench.sizes", std::string( trim( part ) ) ) );
                    c.bench_sizes = std::move( sizes );
                  },
                  []( C const& c ) {
                    std::string s;
                    for ( auto n : c.bench_sizes )
                      s += ( s.empty() ? "" : "," ) + std::to_string( n );
                    return s;
                  } },
      count_key<std::size_t>( "bench.repeats", "timing repetitions (best is kept)", []( C& c ) -> auto& { return c.bench_repeats; } ),
  };
  return keys;
}

/*! \brief Semantic checks across keys. */
inline void validate_config( RunConfig const& c )
{
  auto fail = []( std::string const& key, std::string const& why ) { throw config_error( "config key '" + key + "': " + why ); };
  if ( c.designs < 2 )
    fail( "designs", "at least 2 designs are needed" );
  if ( c.test_designs == 0 || c.test_designs >= c.designs )
    fail( "test_designs", "must be between 1 and designs-1" );
  if ( c.gen.n_cells < 50 )
    fail( "gen.n_cells", "must be at least 50" );
  if ( !( c.size_spread >= 0 && c.size_spread < 1 ) )
    fail( "gen.size_spread", "must lie in [0, 1)" );
  if ( !( c.gen.register_fraction > 0 && c.gen.register_fraction < 0.5 ) )
    fail( "gen.register_fraction", "must lie in (0, 0.5)" );
  if ( c.gen.fanout < 2 )
    fail( "gen.fanout", "must be at least 2" );
  if ( c.gen.levels < 1 )
    fail( "gen.levels", "must be at least 1" );
  if ( c.layout.max_fanout < 2 )
    fail( "layout.max_fanout", "must be at least 2" );
  if ( c.layout.branching < 2 )
    fail( "layout.branching", "must be at least 2" );
  if ( !( c.layout.wire_cap_per_fanout >= 0 ) )
    fail( "layout.wire_cap_per_fanout", "must be non-negative" );
  if ( c.cycles == 0 )
    fail( "sim.cycles", "must be positive" );
  if ( c.encoder.embed_dim < 8 )
    fail( "encoder.embed_dim", "must be at least 8" );
  if ( c.encoder.mp_layers < 1 )
    fail( "encoder.mp_layers", "must be at least 1" );
  if ( !( c.encoder.beta >= 0 && c.encoder.beta <= 1 ) )
    fail( "encoder.beta", "must lie in [0, 1]" );
  if ( c.pretrain.batch_size < 2 )
    fail( "pretrain.batch_size", "must be at least 2 (in-batch negatives)" );
  if ( !( c.pretrain.lr > 0 ) )
    fail( "pretrain.lr", "must be positive" );
  if ( !( c.pretrain.tau > 0 ) )
    fail( "pretrain.tau", "must be positive" );
  if ( !( c.pretrain.mask_ratio > 0 && c.pretrain.mask_ratio <= 0.5 ) )
    fail( "pretrain.mask_ratio", "must lie in (0, 0.5]" );
  if ( c.finetune.n_estimators == 0 )
    fail( "finetune.n_estimators", "must be positive" );
  if ( c.finetune.max_depth == 0 )
    fail( "finetune.max_depth", "must be positive" );
  if ( !( c.finetune.shrinkage > 0 && c.finetune.shrinkage <= 1 ) )
    fail( "finetune.shrinkage", "must lie in (0, 1]" );
  if ( c.bench_sizes.size() < 2 )
    fail( "bench.sizes", "needs at least two sizes" );
  if ( c.bench_repeats == 0 )
    fail( "bench.repeats", "must be positive" );
}

/*! \brief Set one key; unknown keys and bad values throw config_error. */
inline void set_config_value( RunConfig& c, std::string const& key, std::string const& value )
{
  for ( auto const& k : config_keys() )
    if ( k.name == key )
      return k.set( c, value );
  throw config_error( "unknown config key '" + key + "'" );
}

/*! \brief Apply `key = value` lines; '#' starts a comment. */
inline void apply_config_text( RunConfig& c, std::string_view text, std::string const& origin )
{
  std::size_t line_no = 0;
  for ( auto const& raw : split( text, '\n' ) )
  {
    ++line_no;
    auto line = std::string( raw.substr( 0, raw.find( '#' ) ) );
    auto const t = trim( line );
    if ( t.empty() )
      continue;
    auto const eq = t.find( '=' );
    if ( eq == std::string_view::npos )
      throw config_error( origin + ":" + std::to_string( line_no ) + ": expected 'key = value'" );
    set_config_value( c, std::string( trim( t.substr( 0, eq ) ) ), std::string( trim( t.substr( eq + 1 ) ) ) );
  }
}

/*! \brief `key=value` override as given on the command line. */
inline void apply_override( RunConfig& c, std::string const& kv )
{
  auto const eq = kv.find( '=' );
  if ( eq == std::string::npos )
    throw config_error( "override '" + kv + "' is not of the form key=value" );
  set_config_value( c, std::string( trim( kv.substr( 0, eq ) ) ), std::string( trim( kv.substr( eq + 1 ) ) ) );
}

/*! \brief Canonical text form: every key in schema order. */
inline std::string config_to_text( RunConfig const& c )
{
  std::ostringstream os;
  for ( auto const& k : config_keys() )
    os << k.name << " = " << k.get( c ) << '\n';
  return os.str();
}

/*! \brief File, then overrides, then $PWRGRAPH_OUT; validated. */
inline RunConfig load_run_config( std::string const& path, std::vector<std::string> const& overrides )
{
  RunConfig c;
  if ( !path.empty() )
  {
    std::string text;
    try
    {
      text = read_file( path );
    }
    catch ( error const& e )
    {
      throw config_error( e.what() );
    }
    apply_config_text( c, text, path );
  }
  for ( auto const& o : overrides )
    apply_override( c, o );
  if ( auto const* env = std::getenv( "PWRGRAPH_OUT" ); env && *env )
    c.out_dir = env;
  validate_config( c );
  return c;
}

} // namespace pwrgraph
