#pragma once

#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "../nn/encoder.hpp"
#include "../segment/dataset.hpp"
#include "../util/strings.hpp"
#include "features.hpp"
#include "gbrt.hpp"

namespace pwrgraph
{

/*! \brief The three group regressors: clock tree on E_g only, comb/reg on E_g plus group features. */
struct GroupModels
{
  GbrtModel ct, comb, reg;
};

/*! \brief Predicted group power of one (design, scope, cycle). */
struct PowerPrediction
{
  std::uint32_t design{ 0 }, scope{ 0 }, cycle{ 0 };
  GroupPower groups;

  double total() const { return groups.total(); }
};

inline GroupPower predict_groups( GroupModels const& m, GroupFeatures const& f )
{
  if ( m.ct.n_features != static_cast<std::size_t>( f.embedding.size() ) )
    throw argument_error( "predict_total: clock-tree model must take exactly the graph embedding (" +
                          std::to_string( f.embedding.size() ) + " features), got " + std::to_string( m.ct.n_features ) );
  GroupPower g;
  g.clock_tree = gbrt_predict( m.ct, f.clock_tree_row() );
  g.combinational = gbrt_predict( m.comb, f.comb_row() );
  g.register_ = gbrt_predict( m.reg, f.reg_row() );
  return g;
}

inline double predict_total( GroupModels const& m, GroupFeatures const& f ) { return predict_groups( m, f ).total(); }

/*! \brief Fine-tuning features and labels of every (design, scope, cycle) in a manifest. */
struct FeatureTable
{
  struct Row
  {
    std::uint32_t design, scope, cycle;
    GroupFeatures features;
    GroupPower label;
  };
  std::vector<Row> rows;

  std::vector<std::size_t> rows_in( DatasetManifest const& m, std::string const& split ) const
  {
    std::vector<std::size_t> out;
    for ( std::size_t i = 0; i < rows.size(); ++i )
      if ( m.designs.at( rows[i].design ).split == split )
        out.push_back( i );
    return out;
  }
};

/*! \brief Encode every stage-G sample with the frozen encoder and extract its group features. */
inline FeatureTable build_feature_table( std::vector<DesignBundle> const& bundles, DatasetManifest const& m, EncoderWeights const& w,
                                         Library const& lib )
{
  if ( bundles.size() != m.designs.size() )
    throw argument_error( "build_feature_table: manifest and bundles disagree on the design count" );
  FeatureTable t;
  t.rows.reserve( m.samples.size() );
  std::vector<std::vector<double>> loads;
  std::vector<std::vector<GraphTopology>> topos( bundles.size() );
  for ( std::size_t d = 0; d < bundles.size(); ++d )
  {
    loads.push_back( net_load_caps( bundles[d].g.netlist, lib ) );
    for ( auto const& g : bundles[d].g.graphs )
      topos[d].push_back( graph_topology( *g ) );
  }
  for ( auto const& e : m.samples )
  {
    auto const& b = bundles.at( e.design );
    auto const s = b.sample( Stage::G, e.scope, e.cycle );
    auto const emb = encode( w, encoder_input( s.features ), topos[e.design][e.scope] );
    t.rows.push_back( { e.design, e.scope, e.cycle, extract_group_features( s, emb.graph, loads[e.design] ), *s.label } );
  }
  return t;
}

struct FinetuneLog
{
  std::string group;
  double train_mse{ 0 }, validation_mse{ 0 };
  std::size_t train_rows{ 0 }, validation_rows{ 0 };
};

struct FinetuneResult
{
  GroupModels models;
  std::vector<FinetuneLog> log;
};

/*! \brief Fit the three group models on the training split; held-out designs only feed the validation MSE. */
inline FinetuneResult finetune_all( FeatureTable const& t, DatasetManifest const& m, GbrtConfig const& cfg )
{
  auto const train = t.rows_in( m, "train" );
  auto const val = t.rows_in( m, "test" );
  if ( train.size() < 2 )
    throw argument_error( "finetune_all: training split is empty" );
  FinetuneResult r;
  struct Head
  {
    char const* name;
    PowerGroup group;
    GbrtModel GroupModels::*model;
    std::vector<double> ( GroupFeatures::*row )() const;
  };
  Head const heads[] = { { "clock_tree", PowerGroup::clock_tree, &GroupModels::ct, &GroupFeatures::clock_tree_row },
                         { "combinational", PowerGroup::combinational, &GroupModels::comb, &GroupFeatures::comb_row },
                         { "register", PowerGroup::register_, &GroupModels::reg, &GroupFeatures::reg_row } };
  for ( auto const& h : heads )
  {
    std::vector<std::vector<double>> rows;
    std::vector<double> y;
    for ( auto i : train )
    {
      rows.push_back( ( t.rows[i].features.*h.row )() );
      y.push_back( t.rows[i].label[h.group] );
    }
    auto& model = r.models.*h.model;
    model = gbrt_fit( rows, y, cfg );
    FinetuneLog l;
    l.group = h.name;
    l.train_rows = train.size();
    l.validation_rows = val.size();
    for ( std::size_t k = 0; k < rows.size(); ++k )
    {
      double const e = gbrt_predict( model, rows[k] ) - y[k];
      l.train_mse += e * e / static_cast<double>( rows.size() );
    }
    for ( auto i : val )
    {
      double const e = gbrt_predict( model, ( t.rows[i].features.*h.row )() ) - t.rows[i].label[h.group];
      l.validation_mse += e * e / static_cast<double>( val.size() );
    }
    r.log.push_back( l );
  }
  return r;
}

inline std::vector<PowerPrediction> predict_table( GroupModels const& models, FeatureTable const& t )
{
  std::vector<PowerPrediction> out;
  out.reserve( t.rows.size() );
  for ( auto const& r : t.rows )
    out.push_back( { r.design, r.scope, r.cycle, predict_groups( models, r.features ) } );
  return out;
}

inline std::string predictions_csv( std::vector<PowerPrediction> const& preds, DatasetManifest const& m )
{
  std::ostringstream os;
  os << "design,scope,cycle,comb_w,reg_w,ct_w,total_w\n";
  for ( auto const& p : preds )
  {
    auto const& d = m.designs.at( p.design );
    os << d.id << ',' << d.scopes.at( p.scope ) << ',' << p.cycle << ',' << format_double( p.groups.combinational ) << ','
       << format_double( p.groups.register_ ) << ',' << format_double( p.groups.clock_tree ) << ',' << format_double( p.total() )
       << '\n';
  }
  return os.str();
}

inline nlohmann::json group_models_to_json( GroupModels const& m )
{
  return { { "format", "pwrgraph-group-models" },
           { "version", 1 },
           { "clock_tree", gbrt_to_json( m.ct ) },
           { "combinational", gbrt_to_json( m.comb ) },
           { "register", gbrt_to_json( m.reg ) } };
}

inline GroupModels group_models_from_json( nlohmann::json const& j )
{
  if ( j.value( "format", "" ) != "pwrgraph-group-models" || j.value( "version", 0 ) != 1 )
    throw argument_error( "not a version-1 group-model document" );
  for ( auto const* k : { "clock_tree", "combinational", "register" } )
    if ( !j.contains( k ) )
      throw argument_error( std::string( "group-model document lacks the '" ) + k + "' model" );
  return { gbrt_from_json( j.at( "clock_tree" ) ), gbrt_from_json( j.at( "combinational" ) ), gbrt_from_json( j.at( "register" ) ) };
}

} // namespace pwrgraph
