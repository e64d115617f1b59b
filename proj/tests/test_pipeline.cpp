#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>

#include <pwrgraph/pipeline/config.hpp>
#include <pwrgraph/pipeline/runner.hpp>

using namespace pwrgraph;
namespace fs = std::filesystem;

namespace
{

fs::path scratch( std::string const& name )
{
  auto const p = fs::temp_directory_path() / ( "pwrgraph_test_" + name );
  fs::remove_all( p );
  return p;
}

RunConfig tiny( fs::path const& out )
{
  RunConfig c;
  c.out_dir = out.string();
  c.designs = 3;
  c.test_designs = 1;
  c.gen.n_cells = 200;
  c.cycles = 12;
  c.encoder.embed_dim = 8;
  c.pretrain.epochs = 1;
  c.pretrain.max_batches_per_epoch = 3;
  c.finetune.n_estimators = 10;
  c.bench_sizes = { 200, 400 };
  c.bench_repeats = 1;
  validate_config( c );
  return c;
}

int run_cli( std::string const& args )
{
  auto const rc = std::system( ( std::string( PWRGRAPH_CLI ) + " " + args + " >/dev/null 2>&1" ).c_str() );
  return WIFEXITED( rc ) ? WEXITSTATUS( rc ) : -1;
}

} // namespace

TEST( Config, UnknownKeyAndBadValues )
{
  RunConfig c;
  EXPECT_THROW( set_config_value( c, "pretrain.epoch", "3" ), config_error );
  EXPECT_THROW( set_config_value( c, "pretrain.epochs", "-3" ), config_error );
  EXPECT_THROW( set_config_value( c, "pretrain.epochs", "3x" ), config_error );
  EXPECT_THROW( set_config_value( c, "pretrain.lr", "fast" ), config_error );
  EXPECT_THROW( set_config_value( c, "pretrain.size_log2", "maybe" ), config_error );
  EXPECT_THROW( apply_override( c, "pretrain.epochs" ), config_error );
  EXPECT_THROW( apply_config_text( c, "designs = 4\nnot a line\n", "inline" ), config_error );
  set_config_value( c, "pretrain.epochs", "7" );
  EXPECT_EQ( c.pretrain.epochs, 7u );
}

TEST( Config, SemanticChecks )
{
  RunConfig c;
  c.test_designs = c.designs;
  EXPECT_THROW( validate_config( c ), config_error );
  c = RunConfig{};
  c.encoder.beta = 1.5;
  EXPECT_THROW( validate_config( c ), config_error );
  c = RunConfig{};
  c.pretrain.batch_size = 1;
  EXPECT_THROW( validate_config( c ), config_error );
}

TEST( Config, TextRoundTrip )
{
  RunConfig c;
  apply_config_text( c, "# comment\ndesigns = 9\nbench.sizes = 10, 20,30\npretrain.lr = 0.002\n", "inline" );
  EXPECT_EQ( c.designs, 9u );
  EXPECT_EQ( c.bench_sizes, ( std::vector<std::size_t>{ 10, 20, 30 } ) );
  RunConfig d;
  apply_config_text( d, config_to_text( c ), "round trip" );
  EXPECT_EQ( config_to_text( d ), config_to_text( c ) );
}

TEST( Pipeline, GenIsDeterministic )
{
  auto const a = scratch( "gen_a" ), b = scratch( "gen_b" );
  for ( auto const& root : { a, b } )
  {
    auto c = tiny( root );
    c.gen.seed = 7;
    Pipeline( c ).run( "gen" );
  }
  for ( std::size_t i = 0; i < 3; ++i )
  {
    auto const rel = "designs/d" + std::to_string( i ) + ".G.v";
    EXPECT_EQ( read_file( ( a / rel ).string() ), read_file( ( b / rel ).string() ) ) << rel;
  }
  fs::remove_all( a );
  fs::remove_all( b );
}

TEST( Pipeline, EndToEndThenUpToDate )
{
  auto const root = scratch( "e2e" );
  auto const c = tiny( root );
  {
    Pipeline p( c );
    p.run( "all" );
    for ( auto const& r : p.records() )
      EXPECT_EQ( r.status, "ran" ) << r.name;
  }
  for ( auto const* f : { "eval/metrics.json", "eval/trace.csv", "predict/predictions.csv", "pretrain/checkpoint.json", "dataset/manifest.json" } )
    EXPECT_TRUE( fs::exists( root / f ) ) << f;
  auto const metrics = nlohmann::json::parse( read_file( ( root / "eval/metrics.json" ).string() ) );
  EXPECT_TRUE( metrics.is_object() );

  Pipeline again( c );
  again.run( "all" );
  for ( auto const& r : again.records() )
    EXPECT_EQ( r.status, "skipped" ) << r.name;

  // a finetune key invalidates finetune and everything after it
  auto c2 = c;
  c2.finetune.n_estimators = 11;
  Pipeline third( c2 );
  third.run( "all" );
  for ( auto const& r : third.records() )
  {
    bool const downstream = r.name == "finetune" || r.name == "predict" || r.name == "eval";
    EXPECT_EQ( r.status, downstream ? "ran" : "skipped" ) << r.name;
  }
  fs::remove_all( root );
}

TEST( Pipeline, TamperedArtifactIsRegenerated )
{
  auto const root = scratch( "corrupt" );
  auto const c = tiny( root );
  Pipeline( c ).run( "gen" );
  write_file( ( root / "designs/d1.G.v" ).string(), "module top (a;\n" );
  // the gen stamp no longer matches, so gen reruns and restores the file
  Pipeline( c ).run( "sim" );
  EXPECT_NE( read_file( ( root / "designs/d1.G.v" ).string() ), "module top (a;\n" );
  fs::remove_all( root );
}

TEST( Cli, ExitStatus )
{
  auto const root = scratch( "cli" );
  auto const cfg = root / "bad.cfg";
  fs::create_directories( root );
  write_file( cfg.string(), "designs = lots\n" );
  EXPECT_EQ( run_cli( "gen -c " + cfg.string() ), 2 );
  write_file( cfg.string(), "no_such_key = 1\n" );
  EXPECT_EQ( run_cli( "gen -c " + cfg.string() ), 2 );
  EXPECT_EQ( run_cli( "frobnicate" ), 2 );
  EXPECT_EQ( run_cli( "gen --set out_dir=" + ( root / "ok" ).string() + " --set designs=2 --set test_designs=1 --set gen.n_cells=100 -q" ), 0 );
  EXPECT_TRUE( fs::exists( root / "ok/status.json" ) );
  fs::remove_all( root );
}
