#pragma once

#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "../finetune/predictor.hpp"
#include "../forge/oracle.hpp"
#include "../util/strings.hpp"

namespace pwrgraph
{

struct MapeResult
{
  double percent{ 0.0 };
  std::size_t used{ 0 }, excluded{ 0 }; ///< excluded = zero-label cycles
};

/*! \brief Mean absolute percentage error, skipping cycles whose label is 0. */
inline MapeResult mape( std::vector<double> const& labels, std::vector<double> const& preds )
{
  if ( labels.size() != preds.size() )
    throw argument_error( "mape: " + std::to_string( labels.size() ) + " labels but " + std::to_string( preds.size() ) + " predictions" );
  MapeResult r;
  double s = 0.0;
  for ( std::size_t i = 0; i < labels.size(); ++i )
  {
    if ( labels[i] == 0.0 )
    {
      ++r.excluded;
      continue;
    }
    s += std::abs( labels[i] - preds[i] ) / std::abs( labels[i] );
    ++r.used;
  }
  if ( r.used == 0 )
    throw argument_error( "mape: every label is zero" );
  r.percent = 100.0 * s / static_cast<double>( r.used );
  return r;
}

struct GroupMape
{
  MapeResult combinational, register_, clock_tree, total;
};

inline std::vector<double> group_column( std::vector<GroupPower> const& s, std::optional<PowerGroup> g )
{
  std::vector<double> out;
  out.reserve( s.size() );
  for ( auto const& x : s )
    out.push_back( g ? x[*g] : x.total() );
  return out;
}

inline GroupMape group_mape( std::vector<GroupPower> const& labels, std::vector<GroupPower> const& preds )
{
  auto m = [&]( std::optional<PowerGroup> g ) { return mape( group_column( labels, g ), group_column( preds, g ) ); };
  return { m( PowerGroup::combinational ), m( PowerGroup::register_ ), m( PowerGroup::clock_tree ), m( std::nullopt ) };
}

/*! \brief Stage-G oracle per cycle: no wire load and no clock network beyond the ICGs. */
inline std::vector<GroupPower> baseline_prelayout( Netlist const& g, Library const& lib, WaveTable const& wave )
{
  if ( g.stage != Stage::G )
    throw argument_error( "baseline_prelayout: expects a stage-G netlist" );
  return PowerOracle( g, lib ).series( wave );
}

/*! \brief Design-level per-cycle prediction: sum over the design's scopes. */
inline std::vector<GroupPower> design_series( std::vector<PowerPrediction> const& preds, std::uint32_t design, std::size_t n_cycles )
{
  std::vector<GroupPower> out( n_cycles );
  for ( auto const& p : preds )
    if ( p.design == design )
      out.at( p.cycle ) += p.groups;
  return out;
}

struct ComponentRow
{
  std::string prefix;
  std::size_t scopes{ 0 };
  double label_w{ 0 }, pred_w{ 0 }; ///< mean over cycles
  MapeResult error;
};

/*! \brief Per-prefix sums of scope predictions and labels of one design.
 *
 * `scope_preds[s][c]` and `scope_labels[s][c]` are total watts of scope s at
 * cycle c; a scope belongs to every prefix it lies under.
 */
inline std::vector<ComponentRow> component_report( std::vector<std::string> const& scopes,
                                                   std::vector<std::vector<double>> const& scope_preds,
                                                   std::vector<std::vector<double>> const& scope_labels,
                                                   std::vector<std::string> const& prefixes )
{
  if ( scope_preds.size() != scopes.size() || scope_labels.size() != scopes.size() || scopes.empty() )
    throw argument_error( "component_report: scope tables do not match the scope list" );
  auto const n = scope_labels[0].size();
  std::vector<ComponentRow> out;
  for ( auto const& pre : prefixes )
  {
    ComponentRow r;
    r.prefix = pre;
    std::vector<double> lab( n, 0.0 ), pred( n, 0.0 );
    for ( std::size_t s = 0; s < scopes.size(); ++s )
    {
      if ( !path_under( scopes[s], pre ) )
        continue;
      ++r.scopes;
      for ( std::size_t c = 0; c < n; ++c )
      {
        lab[c] += scope_labels[s].at( c );
        pred[c] += scope_preds[s].at( c );
      }
    }
    if ( r.scopes == 0 )
      throw argument_error( "component_report: prefix '" + pre + "' matches no scope" );
    for ( std::size_t c = 0; c < n; ++c )
    {
      r.label_w += lab[c] / static_cast<double>( n );
      r.pred_w += pred[c] / static_cast<double>( n );
    }
    r.error = mape( lab, pred );
    out.push_back( std::move( r ) );
  }
  return out;
}

/*! \brief Module prefixes one level below the top that contain at least one scope. */
inline std::vector<std::string> top_level_components( std::vector<std::string> const& scopes, std::string const& top )
{
  std::vector<std::string> out;
  for ( auto const& s : scopes )
  {
    if ( !path_under( s, top ) || s == top )
      continue;
    auto const dot = s.find( '.', top.size() + 1 );
    auto p = s.substr( 0, dot );
    if ( std::find( out.begin(), out.end(), p ) == out.end() )
      out.push_back( p );
  }
  return out;
}

/*! \brief Wall-clock seconds of the model path and the oracle-flow path. */
struct RuntimeReport
{
  double preprocess_s{ 0 }; ///< stage-G simulation, segmentation, graphs, features
  double inference_s{ 0 };  ///< encoder plus group models
  double layout_s{ 0 }, simulate_s{ 0 }, label_s{ 0 };

  double model_s() const { return preprocess_s + inference_s; }
  double oracle_s() const { return layout_s + simulate_s + label_s; }
  double speedup() const { return model_s() > 0 ? oracle_s() / model_s() : 0.0; }
};

inline nlohmann::json runtime_to_json( RuntimeReport const& r )
{
  return { { "preprocess_s", r.preprocess_s }, { "inference_s", r.inference_s }, { "model_s", r.model_s() },
           { "layout_s", r.layout_s },         { "simulate_s", r.simulate_s },   { "label_s", r.label_s },
           { "oracle_s", r.oracle_s() },       { "speedup", r.speedup() } };
}

/*! \brief Per-cycle label / prediction / baseline of one design. */
struct DesignTrace
{
  std::string design;
  std::vector<GroupPower> label, pred, baseline;
};

struct EvalReport
{
  std::vector<DesignTrace> traces; ///< held-out designs
  GroupMape model, baseline;       ///< over the concatenated cycles of all traces
  std::map<std::string, std::vector<ComponentRow>> components; ///< per design
  RuntimeReport runtime;
};

inline EvalReport make_eval_report( std::vector<DesignTrace> traces )
{
  if ( traces.empty() )
    throw argument_error( "evaluation needs at least one held-out design" );
  EvalReport r;
  std::vector<GroupPower> lab, pred, base;
  for ( auto const& t : traces )
  {
    if ( t.pred.size() != t.label.size() || t.baseline.size() != t.label.size() )
      throw argument_error( "trace of '" + t.design + "' has mismatched lengths" );
    lab.insert( lab.end(), t.label.begin(), t.label.end() );
    pred.insert( pred.end(), t.pred.begin(), t.pred.end() );
    base.insert( base.end(), t.baseline.begin(), t.baseline.end() );
  }
  r.model = group_mape( lab, pred );
  r.baseline = group_mape( lab, base );
  r.traces = std::move( traces );
  return r;
}

inline nlohmann::json mape_to_json( GroupMape const& m )
{
  auto one = []( MapeResult const& r ) {
    return nlohmann::json{ { "mape_percent", r.percent }, { "cycles", r.used }, { "excluded_zero_label", r.excluded } };
  };
  return { { "combinational", one( m.combinational ) },
           { "register", one( m.register_ ) },
           { "clock_tree", one( m.clock_tree ) },
           { "total", one( m.total ) } };
}

/*! \brief Metrics only; no timings, so equal inputs give byte-identical output. */
inline nlohmann::json metrics_to_json( EvalReport const& r )
{
  nlohmann::json designs = nlohmann::json::array();
  for ( auto const& t : r.traces )
    designs.push_back( { { "design", t.design },
                         { "cycles", t.label.size() },
                         { "model", mape_to_json( group_mape( t.label, t.pred ) ) },
                         { "baseline", mape_to_json( group_mape( t.label, t.baseline ) ) } } );
  nlohmann::json comps = nlohmann::json::object();
  for ( auto const& [d, rows] : r.components )
  {
    nlohmann::json arr = nlohmann::json::array();
    for ( auto const& row : rows )
      arr.push_back( { { "prefix", row.prefix },
                       { "scopes", row.scopes },
                       { "label_w", row.label_w },
                       { "pred_w", row.pred_w },
                       { "mape_percent", row.error.percent } } );
    comps[d] = std::move( arr );
  }
  return { { "model", mape_to_json( r.model ) },
           { "baseline_prelayout", mape_to_json( r.baseline ) },
           { "designs", std::move( designs ) },
           { "components", std::move( comps ) } };
}

inline std::string trace_csv( EvalReport const& r )
{
  std::ostringstream os;
  os << "design,cycle,group,label_w,pred_w,baseline_w\n";
  char const* names[] = { "combinational", "register", "clock_tree", "total" };
  for ( auto const& t : r.traces )
    for ( std::size_t c = 0; c < t.label.size(); ++c )
      for ( int g = 0; g < 4; ++g )
      {
        auto v = [&]( GroupPower const& x ) { return g < 3 ? x[static_cast<PowerGroup>( g )] : x.total(); };
        os << t.design << ',' << c << ',' << names[g] << ',' << format_double( v( t.label[c] ) ) << ','
           << format_double( v( t.pred[c] ) ) << ',' << format_double( v( t.baseline[c] ) ) << '\n';
      }
  return os.str();
}

/*! \brief Long-format total-power traces for external plotting. */
inline std::string plot_csv( EvalReport const& r )
{
  std::ostringstream os;
  os << "cycle,series,watts\n";
  for ( auto const& t : r.traces )
    for ( auto const& [name, s] : { std::pair{ "label", &t.label }, std::pair{ "pred", &t.pred }, std::pair{ "baseline", &t.baseline } } )
      for ( std::size_t c = 0; c < s->size(); ++c )
        os << c << ',' << t.design << '/' << name << ',' << format_double( ( *s )[c].total() ) << '\n';
  return os.str();
}

inline std::string component_csv( EvalReport const& r )
{
  std::ostringstream os;
  os << "design,prefix,scopes,label_w,pred_w,mape_percent\n";
  for ( auto const& [d, rows] : r.components )
    for ( auto const& row : rows )
      os << d << ',' << row.prefix << ',' << row.scopes << ',' << format_double( row.label_w ) << ',' << format_double( row.pred_w )
         << ',' << format_double( row.error.percent ) << '\n';
  return os.str();
}

} // namespace pwrgraph
