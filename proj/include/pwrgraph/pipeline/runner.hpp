#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "../core/liberty.hpp"
#include "../core/netlist_io.hpp"
#include "../eval/report.hpp"
#include "../finetune/predictor.hpp"
#include "../forge/generator.hpp"
#include "../forge/layout.hpp"
#include "../forge/rewrite.hpp"
#include "../forge/workload.hpp"
#include "../pretrain/checkpoint.hpp"
#include "../pretrain/trainer.hpp"
#include "../segment/dataset.hpp"
#include "../sim/cosim.hpp"
#include "config.hpp"

namespace pwrgraph
{

/*! \brief A pipeline stage failed; the CLI maps it to exit status 1. */
class stage_failure : public error
{
public:
  stage_failure( std::string stage, std::string const& what ) : error( "stage '" + stage + "' failed: " + what ), stage( std::move( stage ) ) {}
  std::string stage;
};

inline std::vector<std::string> const& pipeline_stages()
{
  static std::vector<std::string> const s = { "gen",      "sim",      "transform", "label", "segment", "dataset",
                                              "pretrain", "finetune", "predict",   "eval",  "bench" };
  return s;
}

inline nlohmann::json stimulus_to_json( Stimulus const& s )
{
  nlohmann::json bits = nlohmann::json::object();
  for ( std::size_t i = 0; i < s.inputs.size(); ++i )
  {
    std::string row( s.n_cycles, '0' );
    for ( std::size_t c = 0; c < s.n_cycles; ++c )
      row[c] = static_cast<char>( '0' + s.bits[i][c] );
    bits[s.inputs[i]] = std::move( row );
  }
  return { { "format", "pwrgraph-stimulus" }, { "version", 1 }, { "n_cycles", s.n_cycles }, { "seed", s.seed }, { "bits", std::move( bits ) } };
}

inline Stimulus stimulus_from_json( nlohmann::json const& j )
{
  if ( j.value( "format", "" ) != "pwrgraph-stimulus" || j.value( "version", 0 ) != 1 )
    throw argument_error( "not a version-1 stimulus document" );
  Stimulus s;
  s.n_cycles = j.at( "n_cycles" ).get<std::size_t>();
  s.seed = j.at( "seed" ).get<std::uint64_t>();
  for ( auto const& [name, row] : j.at( "bits" ).items() )
  {
    auto const str = row.get<std::string>();
    if ( str.size() != s.n_cycles )
      throw argument_error( "stimulus of '" + name + "' has the wrong length" );
    s.inputs.push_back( name );
    std::vector<std::uint8_t> b( s.n_cycles );
    for ( std::size_t c = 0; c < s.n_cycles; ++c )
      b[c] = str[c] == '1';
    s.bits.push_back( std::move( b ) );
  }
  return s;
}

/*! \brief Per-cycle labels as long-format CSV (design, scope, cycle, group, watts). */
inline std::string labels_csv( std::string const& design, std::vector<std::string> const& scopes,
                               std::vector<std::vector<GroupPower>> const& labels )
{
  std::ostringstream os;
  os << "design,scope,cycle,group,watts\n";
  char const* names[] = { "combinational", "register", "clock_tree" };
  for ( std::size_t s = 0; s < scopes.size(); ++s )
    for ( std::size_t c = 0; c < labels[s].size(); ++c )
      for ( int g = 0; g < 3; ++g )
        os << design << ',' << scopes[s] << ',' << c << ',' << names[g] << ','
           << format_double( labels[s][c][static_cast<PowerGroup>( g )] ) << '\n';
  return os.str();
}

/*! \brief Parse the prediction CSV back, resolving design and scope names against the manifest. */
inline std::vector<PowerPrediction> parse_predictions_csv( std::string_view text, DatasetManifest const& m )
{
  std::map<std::string, std::uint32_t> design_ix;
  std::vector<std::map<std::string, std::uint32_t>> scope_ix( m.designs.size() );
  for ( std::uint32_t d = 0; d < m.designs.size(); ++d )
  {
    design_ix[m.designs[d].id] = d;
    for ( std::uint32_t s = 0; s < m.designs[d].scopes.size(); ++s )
      scope_ix[d][m.designs[d].scopes[s]] = s;
  }
  std::vector<PowerPrediction> out;
  std::size_t line = 0;
  for ( auto const& raw : split( text, '\n' ) )
  {
    if ( line++ == 0 || trim( raw ).empty() )
      continue;
    auto const f = split( raw, ',' );
    if ( f.size() != 7 )
      throw parse_error( "prediction row needs 7 fields", line, 1 );
    auto const d = design_ix.find( f[0] );
    if ( d == design_ix.end() || !scope_ix[d->second].count( f[1] ) )
      throw parse_error( "prediction row names an unknown design or scope", line, 1 );
    PowerPrediction p;
    p.design = d->second;
    p.scope = scope_ix[d->second].at( f[1] );
    double cyc = 0;
    if ( !parse_double( f[2], cyc ) || !parse_double( f[3], p.groups.combinational ) || !parse_double( f[4], p.groups.register_ ) ||
         !parse_double( f[5], p.groups.clock_tree ) )
      throw parse_error( "prediction row has a malformed number", line, 1 );
    p.cycle = static_cast<std::uint32_t>( cyc );
    out.push_back( p );
  }
  return out;
}

/*! \brief Least-squares slope of log(seconds) on log(size). */
inline double loglog_slope( std::vector<double> const& sizes, std::vector<double> const& seconds )
{
  auto const n = static_cast<double>( sizes.size() );
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for ( std::size_t i = 0; i < sizes.size(); ++i )
  {
    double const x = std::log( sizes[i] ), y = std::log( seconds[i] );
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return ( n * sxy - sx * sy ) / ( n * sxx - sx * sx );
}

/*! \brief Stage-by-stage driver over an artifact directory.
 *
 * Each stage records a stamp (hash of its configuration keys and the content
 * of the artifacts it reads) plus content hashes of what it wrote; a stage
 * whose stamp and outputs still match is skipped.
 */
class Pipeline
{
public:
  struct StageRecord
  {
    std::string name, status; ///< ran | skipped
    double seconds{ 0 };
  };

  explicit Pipeline( RunConfig cfg, std::ostream* log = nullptr ) : cfg_( std::move( cfg ) ), log_( log ), root_( cfg_.out_dir ) {}

  RunConfig const& config() const { return cfg_; }
  std::filesystem::path const& root() const { return root_; }
  std::vector<StageRecord> const& records() const { return records_; }

  /*! \brief Run `command` and whatever it depends on. Throws stage_failure. */
  void run( std::string const& command )
  {
    static std::map<std::string, std::vector<std::string>> const deps = {
        { "gen", {} },
        { "sim", { "gen" } },
        { "transform", { "gen" } },
        { "label", { "sim", "transform" } },
        { "segment", { "transform" } },
        { "dataset", { "sim", "label", "segment" } },
        { "pretrain", { "dataset" } },
        { "finetune", { "pretrain" } },
        { "predict", { "finetune" } },
        { "eval", { "predict" } },
        { "bench", { "finetune" } },
    };
    if ( command == "all" )
    {
      run( "eval" );
      return;
    }
    auto const it = deps.find( command );
    if ( it == deps.end() )
      throw config_error( "unknown command '" + command + "'" );
    for ( auto const& d : it->second )
      run( d );
    if ( std::find_if( records_.begin(), records_.end(), [&]( auto const& r ) { return r.name == command; } ) != records_.end() )
      return;
    auto const t0 = std::chrono::steady_clock::now();
    bool ran = false;
    try
    {
      ran = run_stage( command );
    }
    catch ( stage_failure const& )
    {
      throw;
    }
    catch ( std::exception const& e )
    {
      throw stage_failure( command, e.what() );
    }
    records_.push_back( { command, ran ? "ran" : "skipped",
                          std::chrono::duration<double>( std::chrono::steady_clock::now() - t0 ).count() } );
    say( command + ( ran ? " done" : " up to date" ) );
  }

  std::string design_id( std::size_t i ) const { return "d" + std::to_string( i ); }
  bool is_test( std::size_t i ) const { return i + cfg_.test_designs >= cfg_.designs; }

  std::filesystem::path path( std::string const& rel ) const { return root_ / rel; }

  Library const& library()
  {
    if ( !lib_ )
      lib_ = cfg_.library == "builtin" ? fixture_library() : parse_liberty_lite( read_file( cfg_.library ) );
    return *lib_;
  }

  /*! \brief Design bundles rebuilt from the on-disk netlists and stimuli. */
  std::vector<DesignBundle> const& bundles()
  {
    if ( bundles_.empty() )
      for ( std::size_t i = 0; i < cfg_.designs; ++i )
      {
        auto const id = design_id( i );
        bundles_.push_back( make_bundle( id, netlist( id, "G" ), netlist( id, "Gp" ), netlist( id, "P" ), library(), stimulus( id ),
                                         cfg_.cycles, cfg_.min_cells ) );
      }
    return bundles_;
  }

  DatasetManifest manifest() const { return manifest_from_json( nlohmann::json::parse( read_file( path( "dataset/manifest.json" ).string() ) ) ); }
  Checkpoint checkpoint() const { return load_checkpoint( path( "pretrain/checkpoint.json" ).string() ); }
  GroupModels models() const { return group_models_from_json( nlohmann::json::parse( read_file( path( "finetune/models.json" ).string() ) ) ); }

private:
  void say( std::string const& s )
  {
    if ( log_ )
      *log_ << "[pwrgraph] " << s << std::endl;
  }

  Netlist netlist( std::string const& id, std::string const& stage )
  {
    return parse_netlist( read_file( path( "designs/" + id + "." + stage + ".v" ).string() ), library() );
  }
  Stimulus stimulus( std::string const& id ) const
  {
    return stimulus_from_json( nlohmann::json::parse( read_file( path( "sim/" + id + ".stim.json" ).string() ) ) );
  }

  void put( std::string const& rel, std::string_view content )
  {
    auto const p = path( rel );
    std::filesystem::create_directories( p.parent_path() );
    write_file( p.string(), content );
    written_.push_back( rel );
  }

  std::string config_lines( std::vector<std::string> const& prefixes ) const
  {
    std::string s;
    for ( auto const& k : config_keys() )
      for ( auto const& p : prefixes )
        if ( starts_with( k.name, p ) )
          s += k.name + "=" + k.get( cfg_ ) + "\n";
    return s;
  }

  std::string file_hash( std::string const& rel ) const
  {
    auto const p = path( rel );
    if ( !std::filesystem::exists( p ) )
      return {};
    return hex64( fnv1a( read_file( p.string() ) ) );
  }

  nlohmann::json read_stamp( std::string const& stage ) const
  {
    auto const p = path( "stamps/" + stage + ".json" );
    if ( !std::filesystem::exists( p ) )
      return {};
    try
    {
      return nlohmann::json::parse( read_file( p.string() ) );
    }
    catch ( std::exception const& )
    {
      return {};
    }
  }

  /*! \brief Hash of everything `stage` consumes: its config keys and the outputs of its inputs. */
  std::string stage_stamp( std::string const& stage, std::vector<std::string> const& prefixes, std::vector<std::string> const& inputs ) const
  {
    std::string s = stage + "\n" + config_lines( prefixes );
    for ( auto const& in : inputs )
    {
      auto const st = read_stamp( in );
      s += in + ":" + ( st.is_object() ? st.value( "outputs_hash", "" ) : "" ) + "\n";
    }
    return hex64( fnv1a( s ) );
  }

  bool up_to_date( std::string const& stage, std::string const& stamp ) const
  {
    auto const st = read_stamp( stage );
    if ( !st.is_object() || st.value( "stamp", "" ) != stamp )
      return false;
    for ( auto const& [rel, h] : st.at( "outputs" ).items() )
      if ( file_hash( rel ) != h.get<std::string>() )
        return false;
    return true;
  }

  void write_stamp( std::string const& stage, std::string const& stamp )
  {
    nlohmann::json outputs = nlohmann::json::object();
    std::string all;
    for ( auto const& rel : written_ )
    {
      auto const h = file_hash( rel );
      outputs[rel] = h;
      all += rel + ":" + h + "\n";
    }
    nlohmann::json st = { { "stage", stage }, { "stamp", stamp }, { "outputs_hash", hex64( fnv1a( all ) ) }, { "outputs", outputs } };
    std::filesystem::create_directories( path( "stamps" ) );
    write_file( path( "stamps/" + stage + ".json" ).string(), st.dump( 1 ) );
  }

  bool run_stage( std::string const& stage )
  {
    struct Spec
    {
      std::vector<std::string> prefixes, inputs;
    };
    static std::map<std::string, Spec> const specs = {
        { "gen", { { "library", "designs", "gen." }, {} } },
        { "sim", { { "sim." }, { "gen" } } },
        { "transform", { { "transform.", "layout." }, { "gen" } } },
        { "label", { { "segment." }, { "sim", "transform" } } },
        { "segment", { { "segment." }, { "transform" } } },
        { "dataset", { { "test_designs" }, { "sim", "label", "segment" } } },
        { "pretrain", { { "encoder.", "pretrain." }, { "dataset" } } },
        { "finetune", { { "finetune." }, { "pretrain" } } },
        { "predict", { {}, { "finetune" } } },
        { "eval", { {}, { "predict" } } },
        { "bench", { { "bench." }, { "finetune" } } },
    };
    auto const& sp = specs.at( stage );
    auto const stamp = stage_stamp( stage, sp.prefixes, sp.inputs );
    if ( up_to_date( stage, stamp ) )
      return false;
    written_.clear();
    if ( stage == "gen" )
      stage_gen();
    else if ( stage == "sim" )
      stage_sim();
    else if ( stage == "transform" )
      stage_transform();
    else if ( stage == "label" )
      stage_label();
    else if ( stage == "segment" )
      stage_segment();
    else if ( stage == "dataset" )
      stage_dataset();
    else if ( stage == "pretrain" )
      stage_pretrain( stamp );
    else if ( stage == "finetune" )
      stage_finetune();
    else if ( stage == "predict" )
      stage_predict();
    else if ( stage == "eval" )
      stage_eval();
    else
      stage_bench();
    write_stamp( stage, stamp );
    return true;
  }

  void stage_gen()
  {
    put( "library.lib", write_liberty_lite( library() ) );
    for ( std::size_t i = 0; i < cfg_.designs; ++i )
    {
      auto p = cfg_.gen;
      rng_t rng( derive_seed( cfg_.gen.seed, 0x512e0000ull + i ) );
      double const scale = 1.0 + cfg_.size_spread * ( 2.0 * uniform01( rng ) - 1.0 );
      p.n_cells = std::max<std::size_t>( 50, static_cast<std::size_t>( std::llround( static_cast<double>( cfg_.gen.n_cells ) * scale ) ) );
      p.seed = derive_seed( cfg_.gen.seed, i );
      put( "designs/" + design_id( i ) + ".G.v", write_netlist( gen_design( p, library() ), library() ) );
    }
  }

  void stage_sim()
  {
    for ( std::size_t i = 0; i < cfg_.designs; ++i )
    {
      auto const id = design_id( i );
      auto const g = netlist( id, "G" );
      auto const stim = gen_workload( g, cfg_.cycles, derive_seed( cfg_.workload_seed, i ) );
      put( "sim/" + id + ".stim.json", stimulus_to_json( stim ).dump() );
      auto const w = simulate( g, library(), stim, cfg_.cycles );
      put( "sim/" + id + ".G.vcd", write_vcd( g, w, 1000 ) );
      put( "sim/" + id + ".G.toggles.csv", write_toggle_csv( g, w ) );
    }
  }

  void stage_transform()
  {
    for ( std::size_t i = 0; i < cfg_.designs; ++i )
    {
      auto const id = design_id( i );
      auto const g = netlist( id, "G" );
      auto const gp = equiv_transform( g, library(), cfg_.equiv_rewrites, derive_seed( cfg_.gen.seed, 0xe9000000ull + i ) );
      auto lp = cfg_.layout;
      lp.seed = derive_seed( cfg_.layout.seed, i );
      auto const p = layout_transform( g, library(), lp );
      nlohmann::json rep;
      for ( auto const& [name, nl] : { std::pair{ "Gp", &gp }, std::pair{ "P", &p } } )
      {
        auto const r = cosim_equiv( g, *nl, library(), 1000, derive_seed( cfg_.gen.seed, 0xc0000000ull + i ) );
        if ( !r.equivalent )
          throw invariant_error( "design " + id + ": stage " + name + " differs from stage G at cycle " +
                                 std::to_string( r.mismatch_cycle.value_or( 0 ) ) + " on '" + r.mismatch_net + "'" );
        rep[name] = { { "equivalent", true }, { "cycles", r.cycles_checked }, { "signals", r.signals_compared }, { "cells", nl->cells.size() } };
        put( "designs/" + id + "." + name + ".v", write_netlist( *nl, library() ) );
      }
      put( "transform/" + id + ".equiv.json", rep.dump( 1 ) );
    }
  }

  void stage_label()
  {
    for ( std::size_t i = 0; i < cfg_.designs; ++i )
    {
      auto const id = design_id( i );
      auto const g = netlist( id, "G" );
      auto const p = netlist( id, "P" );
      auto const names = scope_names( segment( g, cfg_.min_cells ) );
      auto const scopes = assign_scopes( p, names );
      auto const w = simulate( p, library(), stimulus( id ), cfg_.cycles );
      PowerOracle const oracle( p, library() );
      std::vector<std::vector<GroupPower>> labels;
      for ( auto const& s : scopes )
        labels.push_back( oracle.series( w, s.cells ) );
      put( "labels/" + id + ".csv", labels_csv( id, names, labels ) );
    }
  }

  void stage_segment()
  {
    for ( std::size_t i = 0; i < cfg_.designs; ++i )
    {
      auto const id = design_id( i );
      nlohmann::json doc = { { "design", id } };
      auto const g = netlist( id, "G" );
      auto const gseg = segment( g, cfg_.min_cells );
      auto const names = scope_names( gseg );
      Connectivity const conn( g );
      nlohmann::json graphs = nlohmann::json::array();
      for ( auto const& s : gseg )
        graphs.push_back( graph_to_json( build_graph( g, library(), conn, s.name, s.cells ), g ) );
      for ( auto const& [stage, seg] : { std::pair{ "G", gseg }, std::pair{ "Gp", assign_scopes( netlist( id, "Gp" ), names ) },
                                         std::pair{ "P", assign_scopes( netlist( id, "P" ), names ) } } )
      {
        nlohmann::json arr = nlohmann::json::array();
        for ( auto const& s : seg )
          arr.push_back( { { "scope", s.name }, { "cells", s.cells.size() } } );
        doc["scopes"][stage] = std::move( arr );
      }
      doc["graphs_G"] = std::move( graphs );
      put( "segments/" + id + ".json", doc.dump() );
    }
  }

  void stage_dataset()
  {
    std::vector<std::string> train, test;
    for ( std::size_t i = 0; i < cfg_.designs; ++i )
      ( is_test( i ) ? test : train ).push_back( design_id( i ) );
    auto m = assemble_dataset( bundles(), train, test, cfg_.gen.seed );
    for ( auto& d : m.designs )
      d.files = { { "G", "designs/" + d.id + ".G.v" },          { "G_PLUS", "designs/" + d.id + ".Gp.v" },
                  { "P", "designs/" + d.id + ".P.v" },          { "stimulus", "sim/" + d.id + ".stim.json" },
                  { "labels", "labels/" + d.id + ".csv" },      { "segments", "segments/" + d.id + ".json" } };
    put( "dataset/manifest.json", manifest_to_json( m ).dump( 1 ) );
  }

  void stage_pretrain( std::string const& stamp )
  {
    auto const m = manifest();
    auto ck = initial_checkpoint( cfg_.encoder, cfg_.pretrain );
    std::vector<std::string> rows, epochs;
    // resume a run with the same stamp that stopped between epochs
    auto const partial = path( "pretrain/partial.json" );
    if ( std::filesystem::exists( partial ) )
    {
      auto const j = nlohmann::json::parse( read_file( partial.string() ) );
      if ( j.value( "stamp", "" ) == stamp )
      {
        ck = checkpoint();
        rows = j.at( "batch_rows" ).get<std::vector<std::string>>();
        epochs = j.at( "epoch_rows" ).get<std::vector<std::string>>();
        say( "pretrain resumes at epoch " + std::to_string( ck.epoch ) );
      }
    }
    PretrainCallbacks cb;
    cb.on_batch = [&]( PretrainLogRow const& r ) {
      auto csv = pretrain_log_csv( { r } );
      rows.push_back( csv.substr( csv.find( '\n' ) + 1 ) );
    };
    cb.on_epoch = [&]( Checkpoint const& k, LossBreakdown const& mean ) {
      std::ostringstream os;
      os << k.epoch - 1 << ',' << format_double( mean.l_mt ) << ',' << format_double( mean.l_mn ) << ',' << format_double( mean.l_size )
         << ',' << format_double( mean.l_cl1 ) << ',' << format_double( mean.l_cl2 ) << ',' << format_double( mean.total() ) << '\n';
      epochs.push_back( os.str() );
      std::filesystem::create_directories( path( "pretrain" ) );
      save_checkpoint( k, path( "pretrain/checkpoint.json" ).string() );
      write_file( partial.string(), nlohmann::json{ { "stamp", stamp }, { "batch_rows", rows }, { "epoch_rows", epochs } }.dump() );
      say( "pretrain epoch " + std::to_string( k.epoch - 1 ) + " loss " + format_double( mean.total() ) );
    };
    ck = pretrain( bundles(), m, cfg_.pretrain, ck, cb );
    std::string log = "epoch,batch,l_mt,l_mn,l_size,l_cl1,l_cl2,total\n";
    for ( auto const& r : rows )
      log += r;
    std::string elog = "epoch,l_mt,l_mn,l_size,l_cl1,l_cl2,total\n";
    for ( auto const& r : epochs )
      elog += r;
    put( "pretrain/log.csv", log );
    put( "pretrain/epochs.csv", elog );
    put( "pretrain/checkpoint.json", checkpoint_to_json( ck ).dump() );
    std::filesystem::remove( partial );
  }

  FeatureTable const& features()
  {
    if ( !features_ )
      features_ = build_feature_table( bundles(), manifest(), checkpoint().model.encoder, library() );
    return *features_;
  }

  void stage_finetune()
  {
    auto const r = finetune_all( features(), manifest(), cfg_.finetune );
    std::ostringstream os;
    os << "group,train_rows,train_mse,validation_rows,validation_mse\n";
    for ( auto const& l : r.log )
      os << l.group << ',' << l.train_rows << ',' << format_double( l.train_mse ) << ',' << l.validation_rows << ','
         << format_double( l.validation_mse ) << '\n';
    put( "finetune/log.csv", os.str() );
    put( "finetune/models.json", group_models_to_json( r.models ).dump() );
  }

  void stage_predict()
  {
    put( "predict/predictions.csv", predictions_csv( predict_table( models(), features() ), manifest() ) );
  }

  /*! \brief Model path vs oracle flow on one design, from the stage-G netlist and its stimulus. */
  void time_paths( std::size_t i, GroupModels const& models, EncoderWeights const& enc, RuntimeReport& rt )
  {
    using clk = std::chrono::steady_clock;
    auto secs = []( clk::time_point a ) { return std::chrono::duration<double>( clk::now() - a ).count(); };
    auto const id = design_id( i );
    auto const g = netlist( id, "G" );
    auto const stim = stimulus( id );

    auto t = clk::now();
    auto const w = simulate( g, library(), stim, cfg_.cycles );
    auto const seg = segment( g, cfg_.min_cells );
    Connectivity const conn( g );
    std::vector<std::shared_ptr<DirectedCircuitGraph const>> graphs;
    std::vector<GraphTopology> topos;
    for ( auto const& s : seg )
    {
      graphs.push_back( std::make_shared<DirectedCircuitGraph const>( build_graph( g, library(), conn, s.name, s.cells ) ) );
      topos.push_back( graph_topology( *graphs.back() ) );
    }
    auto const load = net_load_caps( g, library() );
    rt.preprocess_s += secs( t );

    t = clk::now();
    std::vector<double> total( cfg_.cycles, 0.0 );
    for ( std::size_t s = 0; s < graphs.size(); ++s )
      for ( std::size_t c = 0; c < cfg_.cycles; ++c )
      {
        auto const smp = annotate( graphs[s], w, c );
        auto const e = encode( enc, encoder_input( smp.features ), topos[s] );
        total[c] += predict_total( models, extract_group_features( smp, e.graph, load ) );
      }
    rt.inference_s += secs( t );

    t = clk::now();
    auto lp = cfg_.layout;
    lp.seed = derive_seed( cfg_.layout.seed, i );
    auto const p = layout_transform( g, library(), lp );
    rt.layout_s += secs( t );
    t = clk::now();
    auto const wp = simulate( p, library(), stim, cfg_.cycles );
    rt.simulate_s += secs( t );
    t = clk::now();
    auto const labels = PowerOracle( p, library() ).series( wp );
    rt.label_s += secs( t );
    if ( total.empty() || labels.empty() )
      throw invariant_error( "runtime measurement produced no cycles" );
  }

  void stage_eval()
  {
    auto const m = manifest();
    auto const preds = parse_predictions_csv( read_file( path( "predict/predictions.csv" ).string() ), m );
    std::vector<DesignTrace> traces;
    std::map<std::string, std::vector<ComponentRow>> comps;
    for ( auto d : m.designs_in( "test" ) )
    {
      auto const& b = bundles().at( d );
      DesignTrace t;
      t.design = b.id;
      t.label = b.design_labels;
      t.pred = design_series( preds, static_cast<std::uint32_t>( d ), b.n_cycles() );
      t.baseline = baseline_prelayout( b.g.netlist, library(), b.g.wave );
      std::vector<std::vector<double>> sp( b.n_scopes(), std::vector<double>( b.n_cycles(), 0.0 ) ), sl = sp;
      for ( auto const& p : preds )
        if ( p.design == d )
          sp[p.scope][p.cycle] = p.total();
      for ( std::size_t s = 0; s < b.n_scopes(); ++s )
        for ( std::size_t c = 0; c < b.n_cycles(); ++c )
          sl[s][c] = b.labels[s][c].total();
      auto const names = scope_names( b.g.scopes );
      auto prefixes = top_level_components( names, b.g.netlist.top );
      prefixes.insert( prefixes.begin(), b.g.netlist.top );
      if ( std::find( names.begin(), names.end(), glue_scope ) != names.end() )
        prefixes.push_back( glue_scope );
      comps[b.id] = component_report( names, sp, sl, prefixes );
      traces.push_back( std::move( t ) );
    }
    auto rep = make_eval_report( std::move( traces ) );
    rep.components = std::move( comps );

    auto const models = this->models();
    auto const enc = checkpoint().model.encoder;
    for ( auto d : m.designs_in( "test" ) )
      time_paths( d, models, enc, rep.runtime );

    put( "eval/metrics.json", metrics_to_json( rep ).dump( 2 ) );
    put( "eval/runtime.json", runtime_to_json( rep.runtime ).dump( 2 ) );
    put( "eval/trace.csv", trace_csv( rep ) );
    put( "eval/plot.csv", plot_csv( rep ) );
    put( "eval/components.csv", component_csv( rep ) );
    say( "total MAPE " + format_double( rep.model.total.percent ) + "% (baseline " + format_double( rep.baseline.total.percent ) +
         "%), speedup " + format_double( rep.runtime.speedup() ) );
  }

  void stage_bench()
  {
    using clk = std::chrono::steady_clock;
    auto const enc = checkpoint().model.encoder;
    nlohmann::json scaling = nlohmann::json::array();
    std::vector<double> xs, ys;
    for ( auto n : cfg_.bench_sizes )
    {
      GenParams p = cfg_.gen;
      p.n_cells = n;
      p.seed = derive_seed( cfg_.gen.seed, 0xbe0c0000ull + n );
      auto const g = gen_design( p, library() );
      auto const graph = build_graph( g, library(), g.top );
      auto const w = simulate( g, library(), gen_workload( g, 2, p.seed ), 2 );
      auto const s = annotate( graph, w, 1 );
      auto const input = encoder_input( s.features );
      auto const topo = graph_topology( graph );
      double best = INFINITY;
      for ( std::size_t r = 0; r < cfg_.bench_repeats; ++r )
      {
        auto const t = clk::now();
        auto const e = encode( enc, input, topo );
        best = std::min( best, std::chrono::duration<double>( clk::now() - t ).count() );
        if ( !e.graph.allFinite() )
          throw invariant_error( "encode produced a non-finite embedding" );
      }
      xs.push_back( static_cast<double>( graph.size() ) );
      ys.push_back( best );
      scaling.push_back( { { "nodes", graph.size() }, { "seconds", best } } );
    }
    RuntimeReport rt;
    auto const models = this->models();
    for ( auto d : manifest().designs_in( "test" ) )
      time_paths( d, models, enc, rt );
    nlohmann::json j = { { "encode_scaling", scaling }, { "loglog_slope", loglog_slope( xs, ys ) }, { "runtime", runtime_to_json( rt ) } };
    put( "bench/bench.json", j.dump( 2 ) );
    say( "encode log-log slope " + format_double( j["loglog_slope"].get<double>() ) + ", speedup " + format_double( rt.speedup() ) );
  }

  RunConfig cfg_;
  std::ostream* log_;
  std::filesystem::path root_;
  std::optional<Library> lib_;
  std::vector<DesignBundle> bundles_;
  std::optional<FeatureTable> features_;
  std::vector<std::string> written_;
  std::vector<StageRecord> records_;
};

/*! \brief Machine-readable outcome of a CLI invocation. */
inline nlohmann::json status_json( std::string const& command, Pipeline const* p, int exit_code, std::string const& failed_stage,
                                   std::string const& message )
{
  nlohmann::json stages = nlohmann::json::array();
  if ( p )
    for ( auto const& r : p->records() )
      stages.push_back( { { "stage", r.name }, { "status", r.status }, { "seconds", r.seconds } } );
  return { { "command", command }, { "exit_code", exit_code }, { "failed_stage", failed_stage }, { "message", message }, { "stages", stages } };
}

} // namespace pwrgraph
