#pragma once

#include <algorithm>

#include <Eigen/Dense>

#include "../util/error.hpp"

namespace pwrgraph
{

inline constexpr double attention_eps = 1e-12;

/*! \brief Intermediates of linear_attention needed by the backward pass. */
struct AttentionCache
{
  Eigen::MatrixXd qn, kn;   ///< row-normalized Q and K
  Eigen::VectorXd qnorm, knorm;
  Eigen::MatrixXd S;        ///< kn^T V (d x d)
  Eigen::RowVectorXd ksum;  ///< column sums of kn
  Eigen::VectorXd den;
  Eigen::MatrixXd A;        ///< normalized attention output
  double beta{ 0.5 };
};

namespace detail
{
inline void normalize_rows( Eigen::MatrixXd const& x, Eigen::MatrixXd& xn, Eigen::VectorXd& norm )
{
  norm = x.rowwise().norm().cwiseMax( attention_eps );
  xn = norm.cwiseInverse().asDiagonal() * x;
}

/*! d(x / max(|x|, eps)) for each row. */
inline Eigen::MatrixXd normalize_rows_backward( Eigen::MatrixXd const& xn, Eigen::VectorXd const& norm,
                                                Eigen::MatrixXd const& dxn )
{
  Eigen::MatrixXd dx( xn.rows(), xn.cols() );
  for ( Eigen::Index i = 0; i < xn.rows(); ++i )
  {
    if ( norm( i ) <= attention_eps )
      dx.row( i ) = dxn.row( i ) / attention_eps;
    else
      dx.row( i ) = ( dxn.row( i ) - xn.row( i ) * xn.row( i ).dot( dxn.row( i ) ) ) / norm( i );
  }
  return dx;
}
} // namespace detail

/*! \brief Global attention in O(n d^2).
 *
 * With q~, k~ the L2-normalized rows of Q and K, node i attends to every node
 * j with the non-negative weight 1 + q~_i . k~_j:
 *
 *   Z_i = beta V_i + (1 - beta) * sum_j (1 + q~_i.k~_j) V_j / sum_j (1 + q~_i.k~_j)
 *
 * evaluated as (1 sum(V) + Q~ (K~^T V)) / (n + Q~ K~^T 1) without forming
 * the n x n matrix. Denominators are clamped at 1e-12.
 */
inline Eigen::MatrixXd linear_attention( Eigen::MatrixXd const& Q, Eigen::MatrixXd const& K, Eigen::MatrixXd const& V,
                                         double beta, AttentionCache* cache = nullptr )
{
  if ( Q.rows() != K.rows() || Q.rows() != V.rows() || Q.cols() != K.cols() )
    throw argument_error( "linear_attention: inconsistent shapes" );
  if ( Q.rows() == 0 )
    throw argument_error( "linear_attention: empty input" );
  AttentionCache local;
  auto& c = cache ? *cache : local;
  c.beta = beta;
  detail::normalize_rows( Q, c.qn, c.qnorm );
  detail::normalize_rows( K, c.kn, c.knorm );
  auto const n = static_cast<double>( Q.rows() );
  c.S = c.kn.transpose() * V;
  c.ksum = c.kn.colwise().sum();
  Eigen::RowVectorXd const vsum = V.colwise().sum();
  Eigen::MatrixXd num = c.qn * c.S;
  num.rowwise() += vsum;
  c.den = ( ( c.qn * c.ksum.transpose() ).array() + n ).matrix().cwiseMax( attention_eps );
  c.A = c.den.cwiseInverse().asDiagonal() * num;
  return beta * V + ( 1.0 - beta ) * c.A;
}

/*! \brief Gradients of linear_attention w.r.t. Q, K, V given dZ. */
inline void linear_attention_backward( Eigen::MatrixXd const& V, AttentionCache const& c, Eigen::MatrixXd const& dZ,
                                       Eigen::MatrixXd& dQ, Eigen::MatrixXd& dK, Eigen::MatrixXd& dV )
{
  auto const n = c.qn.rows();
  Eigen::MatrixXd const dA = ( 1.0 - c.beta ) * dZ;
  Eigen::MatrixXd const dnum = c.den.cwiseInverse().asDiagonal() * dA;
  Eigen::VectorXd dden = -( dA.cwiseProduct( c.A ) ).rowwise().sum().cwiseQuotient( c.den );
  for ( Eigen::Index i = 0; i < n; ++i )
    if ( c.den( i ) <= attention_eps )
      dden( i ) = 0.0;
  dV = c.beta * dZ;
  dV.rowwise() += dnum.colwise().sum();
  Eigen::MatrixXd const dS = c.qn.transpose() * dnum;
  Eigen::MatrixXd dqn = dnum * c.S.transpose() + dden * c.ksum;
  Eigen::RowVectorXd const dksum = dden.transpose() * c.qn;
  Eigen::MatrixXd dkn = V * dS.transpose();
  dkn.rowwise() += dksum;
  dV += c.kn * dS;
  dQ = detail::normalize_rows_backward( c.qn, c.qnorm, dqn );
  dK = detail::normalize_rows_backward( c.kn, c.knorm, dkn );
}

} // namespace pwrgraph
