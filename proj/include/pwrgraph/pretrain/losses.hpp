#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "../util/error.hpp"

namespace pwrgraph
{

inline constexpr double probability_clip = 1e-12;

/*! \brief Mean binary cross-entropy; `p_toggle[i]` is the predicted probability that node i toggles. */
inline double loss_masked_toggle( Eigen::VectorXd const& p_toggle, std::vector<std::uint8_t> const& truth )
{
  if ( truth.empty() )
    throw argument_error( "loss_masked_toggle: empty mask set" );
  if ( static_cast<std::size_t>( p_toggle.size() ) != truth.size() )
    throw argument_error( "loss_masked_toggle: size mismatch" );
  double s = 0.0;
  for ( std::size_t i = 0; i < truth.size(); ++i )
  {
    double const p = std::clamp( p_toggle( static_cast<Eigen::Index>( i ) ), probability_clip, 1.0 - probability_clip );
    s -= truth[i] ? std::log( p ) : std::log1p( -p );
  }
  return s / static_cast<double>( truth.size() );
}

/*! \brief Mean categorical cross-entropy of probability rows `q` against class indices. */
inline double loss_masked_type( Eigen::MatrixXd const& q, std::vector<std::size_t> const& truth )
{
  if ( truth.empty() )
    throw argument_error( "loss_masked_type: empty mask set" );
  if ( static_cast<std::size_t>( q.rows() ) != truth.size() )
    throw argument_error( "loss_masked_type: size mismatch" );
  double s = 0.0;
  for ( std::size_t i = 0; i < truth.size(); ++i )
    s -= std::log( std::max( q( static_cast<Eigen::Index>( i ), static_cast<Eigen::Index>( truth[i] ) ), probability_clip ) );
  return s / static_cast<double>( truth.size() );
}

/*! \brief Mean squared error of node-count predictions (both on log2 scale). */
inline double loss_size( Eigen::VectorXd const& pred, Eigen::VectorXd const& truth )
{
  if ( pred.size() != truth.size() || pred.size() == 0 )
    throw argument_error( "loss_size: size mismatch" );
  return ( pred - truth ).squaredNorm() / static_cast<double>( pred.size() );
}

inline double cosine_similarity( Eigen::RowVectorXd const& a, Eigen::RowVectorXd const& b )
{
  double const na = a.norm(), nb = b.norm();
  if ( na == 0.0 || nb == 0.0 )
    throw argument_error( "cosine similarity of a zero-norm embedding" );
  return a.dot( b ) / ( na * nb );
}

/*! \brief -log( exp(s+/tau) / (exp(s+/tau) + sum exp(s-/tau)) ) with cosine similarities. */
inline double info_nce( Eigen::RowVectorXd const& anchor, Eigen::RowVectorXd const& positive,
                        std::vector<Eigen::RowVectorXd> const& negatives, double tau = 0.07 )
{
  if ( !( tau > 0.0 ) )
    throw argument_error( "info_nce: temperature must be positive" );
  double const sp = cosine_similarity( anchor, positive ) / tau;
  std::vector<double> logits{ sp };
  for ( auto const& n : negatives )
    logits.push_back( cosine_similarity( anchor, n ) / tau );
  double const mx = *std::max_element( logits.begin(), logits.end() );
  double z = 0.0;
  for ( auto l : logits )
    z += std::exp( l - mx );
  return -( sp - mx - std::log( z ) );
}

} // namespace pwrgraph
