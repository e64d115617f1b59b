#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <pwrgraph/pipeline/config.hpp>
#include <pwrgraph/pipeline/runner.hpp>

using namespace pwrgraph;

namespace
{

void write_status( std::filesystem::path const& root, nlohmann::json const& status )
{
  try
  {
    std::filesystem::create_directories( root );
    write_file( ( root / "status.json" ).string(), status.dump( 2 ) );
  }
  catch ( std::exception const& e )
  {
    std::cerr << "pwrgraph: cannot write status file: " << e.what() << '\n';
  }
}

} // namespace

int main( int argc, char** argv )
{
  CLI::App app{ "Synthetic power-modelling pipeline: designs, stages, labels, encoder pre-training, group models, evaluation." };
  std::string command, config_path;
  std::vector<std::string> overrides;
  bool quiet = false, print_config = false;
  app.add_option( "command", command, "gen | sim | transform | label | segment | dataset | pretrain | finetune | predict | eval | bench | all" )
      ->required();
  app.add_option( "-c,--config", config_path, "key = value configuration file" );
  app.add_option( "-s,--set", overrides, "override one key, e.g. --set pretrain.epochs=5" );
  app.add_flag( "-q,--quiet", quiet, "no progress messages" );
  app.add_flag( "--print-config", print_config, "print the effective configuration and exit" );
  try
  {
    app.parse( argc, argv );
  }
  catch ( CLI::ParseError const& e )
  {
    app.exit( e );
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  RunConfig cfg;
  try
  {
    cfg = load_run_config( config_path, overrides );
  }
  catch ( config_error const& e )
  {
    std::cerr << "pwrgraph: " << e.what() << '\n';
    return 2;
  }
  if ( print_config )
  {
    std::cout << config_to_text( cfg );
    return 0;
  }
  auto const& stages = pipeline_stages();
  if ( command != "all" && std::find( stages.begin(), stages.end(), command ) == stages.end() )
  {
    std::cerr << "pwrgraph: unknown command '" << command << "'\n";
    return 2;
  }

  Pipeline p( cfg, quiet ? nullptr : &std::cerr );
  try
  {
    p.run( command );
  }
  catch ( stage_failure const& e )
  {
    std::cerr << "pwrgraph: " << e.what() << '\n';
    write_status( p.root(), status_json( command, &p, 1, e.stage, e.what() ) );
    return 1;
  }
  write_status( p.root(), status_json( command, &p, 0, "", "ok" ) );
  return 0;
}
