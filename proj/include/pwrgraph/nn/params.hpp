#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "../util/error.hpp"

namespace pwrgraph
{

/*! \brief Ordered list of named real matrices (weights, gradients, optimizer moments). */
struct ParamSet
{
  std::vector<std::string> names;
  std::vector<Eigen::MatrixXd> values;

  std::size_t size() const { return values.size(); }
  Eigen::MatrixXd& operator[]( std::size_t i ) { return values[i]; }
  Eigen::MatrixXd const& operator[]( std::size_t i ) const { return values[i]; }

  std::size_t add( std::string name, Eigen::MatrixXd v )
  {
    names.push_back( std::move( name ) );
    values.push_back( std::move( v ) );
    return values.size() - 1;
  }

  std::size_t index_of( std::string const& name ) const
  {
    for ( std::size_t i = 0; i < names.size(); ++i )
      if ( names[i] == name )
        return i;
    throw argument_error( "no parameter named '" + name + "'" );
  }

  ParamSet zeros_like() const
  {
    ParamSet z;
    z.names = names;
    for ( auto const& v : values )
      z.values.push_back( Eigen::MatrixXd::Zero( v.rows(), v.cols() ) );
    return z;
  }

  void set_zero()
  {
    for ( auto& v : values )
      v.setZero();
  }

  std::size_t scalar_count() const
  {
    std::size_t n = 0;
    for ( auto const& v : values )
      n += static_cast<std::size_t>( v.size() );
    return n;
  }

  ParamSet& operator+=( ParamSet const& o )
  {
    check_shape( o );
    for ( std::size_t i = 0; i < values.size(); ++i )
      values[i] += o.values[i];
    return *this;
  }

  void check_shape( ParamSet const& o ) const
  {
    if ( o.values.size() != values.size() )
      throw argument_error( "parameter set size mismatch" );
    for ( std::size_t i = 0; i < values.size(); ++i )
      if ( o.values[i].rows() != values[i].rows() || o.values[i].cols() != values[i].cols() )
        throw argument_error( "shape mismatch for parameter '" + names[i] + "'" );
  }

  bool all_finite() const
  {
    for ( auto const& v : values )
      if ( !v.allFinite() )
        return false;
    return true;
  }

  bool operator==( ParamSet const& o ) const
  {
    if ( names != o.names || values.size() != o.values.size() )
      return false;
    for ( std::size_t i = 0; i < values.size(); ++i )
      if ( values[i].rows() != o.values[i].rows() || values[i].cols() != o.values[i].cols() || values[i] != o.values[i] )
        return false;
    return true;
  }
};

} // namespace pwrgraph
