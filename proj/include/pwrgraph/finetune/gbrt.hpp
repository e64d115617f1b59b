#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "../util/error.hpp"

namespace pwrgraph
{

struct GbrtConfig
{
  std::size_t n_estimators{ 500 };
  std::size_t max_depth{ 5 };
  double shrinkage{ 0.1 };
};

struct RegressionTree
{
  struct Node
  {
    int feature{ -1 }; ///< -1 for a leaf
    double threshold{ 0.0 }; ///< go left when x[feature] <= threshold
    int left{ -1 }, right{ -1 };
    double value{ 0.0 };
  };
  std::vector<Node> nodes;

  double predict( double const* x ) const
  {
    int i = 0;
    while ( nodes[i].feature >= 0 )
      i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
    return nodes[i].value;
  }

  std::size_t depth( int i = 0 ) const
  {
    if ( nodes[i].feature < 0 )
      return 0;
    return 1 + std::max( depth( nodes[i].left ), depth( nodes[i].right ) );
  }
};

/*! \brief Squared-error gradient-boosted regression trees. */
struct GbrtModel
{
  GbrtConfig config;
  std::size_t n_features{ 0 };
  double base{ 0.0 };
  std::vector<RegressionTree> trees;
  std::vector<double> train_mse; ///< after 0, 1, ..., n trees
  std::vector<std::string> warnings;

  double predict_raw( std::vector<double> const& row, std::size_t n_trees ) const
  {
    double s = 0.0;
    for ( std::size_t t = 0; t < std::min( n_trees, trees.size() ); ++t )
      s += trees[t].predict( row.data() );
    return base + config.shrinkage * s;
  }
};

/*! \brief base + shrinkage * sum of tree outputs, clamped at 0. */
inline double gbrt_predict( GbrtModel const& m, std::vector<double> const& row )
{
  if ( row.size() != m.n_features )
    throw argument_error( "gbrt_predict: row has " + std::to_string( row.size() ) + " features, model expects " +
                          std::to_string( m.n_features ) );
  return std::max( 0.0, m.predict_raw( row, m.trees.size() ) );
}

/*! \brief Fit by exact greedy axis-aligned splits on the residuals.
 *
 * Rows are first put in a canonical order (lexicographic on features, then
 * target) so the result does not depend on the input row order. Among equal
 * gains the lowest feature index and the lowest threshold win. Splits of
 * zero gain are allowed while a node's residuals still differ, which lets
 * depth-2 trees fit XOR-like targets.
 */
inline GbrtModel gbrt_fit( std::vector<std::vector<double>> const& rows_in, std::vector<double> const& targets_in,
                           GbrtConfig const& cfg )
{
  auto const n = rows_in.size();
  if ( n < 2 )
    throw argument_error( "gbrt_fit: at least 2 rows are required" );
  if ( targets_in.size() != n )
    throw argument_error( "gbrt_fit: row and target counts differ" );
  auto const p = rows_in[0].size();
  for ( auto const& r : rows_in )
    if ( r.size() != p )
      throw argument_error( "gbrt_fit: rows have different widths" );
  for ( auto t : targets_in )
    if ( !std::isfinite( t ) )
      throw argument_error( "gbrt_fit: non-finite target" );

  std::vector<std::size_t> order( n );
  std::iota( order.begin(), order.end(), 0 );
  std::sort( order.begin(), order.end(), [&]( std::size_t a, std::size_t b ) {
    if ( rows_in[a] != rows_in[b] )
      return rows_in[a] < rows_in[b];
    return targets_in[a] < targets_in[b];
  } );
  std::vector<double> X( n * p ), y( n );
  for ( std::size_t i = 0; i < n; ++i )
  {
    std::copy( rows_in[order[i]].begin(), rows_in[order[i]].end(), X.begin() + static_cast<std::ptrdiff_t>( i * p ) );
    y[i] = targets_in[order[i]];
  }

  GbrtModel m;
  m.config = cfg;
  m.n_features = p;
  m.base = std::accumulate( y.begin(), y.end(), 0.0 ) / static_cast<double>( n );

  // features with at least two distinct values, each presorted by (value, row)
  std::vector<std::size_t> usable;
  std::vector<std::vector<std::uint32_t>> sorted;
  for ( std::size_t f = 0; f < p; ++f )
  {
    std::vector<std::uint32_t> idx( n );
    std::iota( idx.begin(), idx.end(), 0u );
    std::stable_sort( idx.begin(), idx.end(), [&]( std::uint32_t a, std::uint32_t b ) { return X[a * p + f] < X[b * p + f]; } );
    if ( X[idx.front() * p + f] < X[idx.back() * p + f] )
    {
      usable.push_back( f );
      sorted.push_back( std::move( idx ) );
    }
  }
  bool const multi_target = *std::min_element( y.begin(), y.end() ) < *std::max_element( y.begin(), y.end() );
  if ( usable.empty() && multi_target )
    m.warnings.push_back( "all features are constant; the model predicts the target mean" );

  std::vector<double> pred( n, m.base ), resid( n );
  auto mse = [&] {
    double s = 0.0;
    for ( std::size_t i = 0; i < n; ++i )
      s += ( y[i] - pred[i] ) * ( y[i] - pred[i] );
    return s / static_cast<double>( n );
  };
  m.train_mse.push_back( mse() );
  if ( usable.empty() )
    return m;

  std::vector<int> pos( n );
  for ( std::size_t t = 0; t < cfg.n_estimators; ++t )
  {
    for ( std::size_t i = 0; i < n; ++i )
      resid[i] = y[i] - pred[i];
    RegressionTree tree;
    tree.nodes.push_back( {} );
    std::fill( pos.begin(), pos.end(), 0 );
    std::vector<int> active{ 0 };
    for ( std::size_t depth = 0; depth <= cfg.max_depth && !active.empty(); ++depth )
    {
      auto const nn = tree.nodes.size();
      std::vector<double> sum( nn, 0.0 ), lo( nn, INFINITY ), hi( nn, -INFINITY );
      std::vector<std::size_t> cnt( nn, 0 );
      std::vector<char> is_active( nn, 0 );
      for ( auto a : active )
        is_active[a] = 1;
      for ( std::size_t i = 0; i < n; ++i )
      {
        auto const k = pos[i];
        if ( k < 0 || !is_active[k] )
          continue;
        sum[k] += resid[i];
        ++cnt[k];
        lo[k] = std::min( lo[k], resid[i] );
        hi[k] = std::max( hi[k], resid[i] );
      }
      for ( auto a : active )
        tree.nodes[a].value = cnt[a] ? sum[a] / static_cast<double>( cnt[a] ) : 0.0;
      if ( depth == cfg.max_depth )
        break;

      std::vector<double> best_gain( nn, -INFINITY ), best_thr( nn, 0.0 );
      std::vector<int> best_feat( nn, -1 );
      std::vector<double> lsum( nn );
      std::vector<std::size_t> lcnt( nn );
      std::vector<double> last( nn );
      for ( std::size_t u = 0; u < usable.size(); ++u )
      {
        auto const f = usable[u];
        std::fill( lsum.begin(), lsum.end(), 0.0 );
        std::fill( lcnt.begin(), lcnt.end(), 0 );
        for ( auto r : sorted[u] )
        {
          auto const k = pos[r];
          if ( k < 0 || !is_active[k] || !( lo[k] < hi[k] ) )
            continue;
          double const v = X[r * p + f];
          if ( lcnt[k] > 0 && v > last[k] )
          {
            double const sl = lsum[k], sr = sum[k] - sl;
            double const nl = static_cast<double>( lcnt[k] ), nr = static_cast<double>( cnt[k] - lcnt[k] );
            double const gain = sl * sl / nl + sr * sr / nr - sum[k] * sum[k] / static_cast<double>( cnt[k] );
            if ( gain > best_gain[k] )
            {
              best_gain[k] = gain;
              best_feat[k] = static_cast<int>( f );
              best_thr[k] = 0.5 * ( last[k] + v );
              if ( !( best_thr[k] < v ) )
                best_thr[k] = last[k];
            }
          }
          lsum[k] += resid[r];
          ++lcnt[k];
          last[k] = v;
        }
      }
      std::vector<int> next;
      for ( auto a : active )
      {
        if ( best_feat[a] < 0 || best_gain[a] < -1e-12 * std::abs( sum[a] * sum[a] / static_cast<double>( cnt[a] ) ) )
          continue;
        auto const l = static_cast<int>( tree.nodes.size() );
        tree.nodes.push_back( {} );
        tree.nodes.push_back( {} );
        tree.nodes[a].feature = best_feat[a];
        tree.nodes[a].threshold = best_thr[a];
        tree.nodes[a].left = l;
        tree.nodes[a].right = l + 1;
        next.push_back( l );
        next.push_back( l + 1 );
      }
      for ( std::size_t i = 0; i < n; ++i )
      {
        auto const k = pos[i];
        if ( k < 0 )
          continue;
        auto const& node = tree.nodes[k];
        if ( node.feature >= 0 )
          pos[i] = X[i * p + static_cast<std::size_t>( node.feature )] <= node.threshold ? node.left : node.right;
        else if ( !is_active[k] )
          pos[i] = -1;
      }
      active = std::move( next );
    }
    for ( std::size_t i = 0; i < n; ++i )
      pred[i] += cfg.shrinkage * tree.predict( &X[i * p] );
    m.trees.push_back( std::move( tree ) );
    m.train_mse.push_back( mse() );
  }
  return m;
}

inline nlohmann::json gbrt_to_json( GbrtModel const& m )
{
  nlohmann::json trees = nlohmann::json::array();
  for ( auto const& t : m.trees )
  {
    std::vector<int> feat, left, right;
    std::vector<double> thr, val;
    for ( auto const& nd : t.nodes )
    {
      feat.push_back( nd.feature );
      thr.push_back( nd.threshold );
      left.push_back( nd.left );
      right.push_back( nd.right );
      val.push_back( nd.value );
    }
    trees.push_back( { { "feature", feat }, { "threshold", thr }, { "left", left }, { "right", right }, { "value", val } } );
  }
  return { { "format", "pwrgraph-gbrt" },
           { "version", 1 },
           { "n_estimators", m.config.n_estimators },
           { "max_depth", m.config.max_depth },
           { "shrinkage", m.config.shrinkage },
           { "n_features", m.n_features },
           { "base", m.base },
           { "train_mse", m.train_mse },
           { "warnings", m.warnings },
           { "trees", std::move( trees ) } };
}

inline GbrtModel gbrt_from_json( nlohmann::json const& j )
{
  if ( j.value( "format", "" ) != "pwrgraph-gbrt" || j.value( "version", 0 ) != 1 )
    throw argument_error( "not a version-1 tree-ensemble document" );
  GbrtModel m;
  m.config.n_estimators = j.at( "n_estimators" ).get<std::size_t>();
  m.config.max_depth = j.at( "max_depth" ).get<std::size_t>();
  m.config.shrinkage = j.at( "shrinkage" ).get<double>();
  m.n_features = j.at( "n_features" ).get<std::size_t>();
  m.base = j.at( "base" ).get<double>();
  m.train_mse = j.at( "train_mse" ).get<std::vector<double>>();
  m.warnings = j.at( "warnings" ).get<std::vector<std::string>>();
  for ( auto const& t : j.at( "trees" ) )
  {
    RegressionTree tree;
    auto const feat = t.at( "feature" ).get<std::vector<int>>();
    auto const thr = t.at( "threshold" ).get<std::vector<double>>();
    auto const left = t.at( "left" ).get<std::vector<int>>();
    auto const right = t.at( "right" ).get<std::vector<int>>();
    auto const val = t.at( "value" ).get<std::vector<double>>();
    for ( std::size_t i = 0; i < feat.size(); ++i )
      tree.nodes.push_back( { feat[i], thr[i], left[i], right[i], val[i] } );
    m.trees.push_back( std::move( tree ) );
  }
  return m;
}

} // namespace pwrgraph
