#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "../util/error.hpp"
#include "../util/strings.hpp"
#include "adam.hpp"
#include "model.hpp"

namespace pwrgraph
{

inline constexpr int checkpoint_version = 1;

/*! \brief Model, optimizer state and progress of a pre-training run. */
struct Checkpoint
{
  PretrainModel model;
  AdamState encoder_opt, heads_opt;
  std::size_t epoch{ 0 }; ///< completed epochs
  std::uint64_t seed{ 0 };
  nlohmann::json train_config = nlohmann::json::object();

  bool operator==( Checkpoint const& ) const = default;
};

inline nlohmann::json params_to_json( ParamSet const& p )
{
  nlohmann::json arr = nlohmann::json::array();
  for ( std::size_t i = 0; i < p.size(); ++i )
  {
    auto const& m = p[i];
    std::vector<double> data( static_cast<std::size_t>( m.size() ) );
    // row-major
    for ( Eigen::Index r = 0; r < m.rows(); ++r )
      for ( Eigen::Index c = 0; c < m.cols(); ++c )
        data[static_cast<std::size_t>( r * m.cols() + c )] = m( r, c );
    arr.push_back( { { "name", p.names[i] }, { "shape", { m.rows(), m.cols() } }, { "data", std::move( data ) } } );
  }
  return arr;
}

inline ParamSet params_from_json( nlohmann::json const& arr )
{
  ParamSet p;
  for ( auto const& e : arr )
  {
    auto const rows = e.at( "shape" ).at( 0 ).get<Eigen::Index>();
    auto const cols = e.at( "shape" ).at( 1 ).get<Eigen::Index>();
    auto const& data = e.at( "data" );
    if ( static_cast<Eigen::Index>( data.size() ) != rows * cols )
      throw parse_error( "array '" + e.at( "name" ).get<std::string>() + "' does not match its shape", 1, 1 );
    Eigen::MatrixXd m( rows, cols );
    for ( Eigen::Index r = 0; r < rows; ++r )
      for ( Eigen::Index c = 0; c < cols; ++c )
        m( r, c ) = data[static_cast<std::size_t>( r * cols + c )].get<double>();
    p.add( e.at( "name" ).get<std::string>(), std::move( m ) );
  }
  return p;
}

inline nlohmann::json encoder_config_to_json( EncoderConfig const& c )
{
  return { { "embed_dim", c.embed_dim }, { "mp_layers", c.mp_layers }, { "beta", c.beta }, { "seed", c.seed } };
}

inline EncoderConfig encoder_config_from_json( nlohmann::json const& j )
{
  EncoderConfig c;
  c.embed_dim = j.at( "embed_dim" ).get<std::size_t>();
  c.mp_layers = j.at( "mp_layers" ).get<std::size_t>();
  c.beta = j.at( "beta" ).get<double>();
  c.seed = j.at( "seed" ).get<std::uint64_t>();
  c.validate();
  return c;
}

inline nlohmann::json checkpoint_to_json( Checkpoint const& ck )
{
  auto opt = []( AdamState const& s ) {
    return nlohmann::json{ { "step", s.step }, { "lr", s.lr }, { "beta1", s.beta1 }, { "beta2", s.beta2 }, { "eps", s.eps },
                           { "m", params_to_json( s.m ) }, { "v", params_to_json( s.v ) } };
  };
  return { { "format", "pwrgraph-checkpoint" },
           { "version", checkpoint_version },
           { "config", encoder_config_to_json( ck.model.encoder.config ) },
           { "seed", ck.seed },
           { "epoch", ck.epoch },
           { "train_config", ck.train_config },
           { "encoder", params_to_json( ck.model.encoder.params ) },
           { "heads", params_to_json( ck.model.heads ) },
           { "optimizer", { { "encoder", opt( ck.encoder_opt ) }, { "heads", opt( ck.heads_opt ) } } } };
}

inline Checkpoint checkpoint_from_json( nlohmann::json const& j )
{
  if ( j.value( "format", "" ) != "pwrgraph-checkpoint" )
    throw parse_error( "not a checkpoint document", 1, 1 );
  if ( j.value( "version", 0 ) != checkpoint_version )
    throw parse_error( "unsupported checkpoint version " + std::to_string( j.value( "version", 0 ) ), 1, 1 );
  Checkpoint ck;
  ck.model.encoder.config = encoder_config_from_json( j.at( "config" ) );
  ck.model.encoder.params = params_from_json( j.at( "encoder" ) );
  ck.model.heads = params_from_json( j.at( "heads" ) );
  // shape check against a fresh model of the same config
  auto const ref = init_model( ck.model.encoder.config );
  ref.encoder.params.check_shape( ck.model.encoder.params );
  ref.heads.check_shape( ck.model.heads );
  ck.seed = j.at( "seed" ).get<std::uint64_t>();
  ck.epoch = j.at( "epoch" ).get<std::size_t>();
  ck.train_config = j.value( "train_config", nlohmann::json::object() );
  auto opt = []( nlohmann::json const& o ) {
    AdamState s;
    s.step = o.at( "step" ).get<std::uint64_t>();
    s.lr = o.at( "lr" ).get<double>();
    s.beta1 = o.at( "beta1" ).get<double>();
    s.beta2 = o.at( "beta2" ).get<double>();
    s.eps = o.at( "eps" ).get<double>();
    s.m = params_from_json( o.at( "m" ) );
    s.v = params_from_json( o.at( "v" ) );
    return s;
  };
  ck.encoder_opt = opt( j.at( "optimizer" ).at( "encoder" ) );
  ck.heads_opt = opt( j.at( "optimizer" ).at( "heads" ) );
  return ck;
}

inline void save_checkpoint( Checkpoint const& ck, std::string const& path ) { write_file( path, checkpoint_to_json( ck ).dump() ); }

inline Checkpoint load_checkpoint( std::string const& path )
{
  try
  {
    return checkpoint_from_json( nlohmann::json::parse( read_file( path ) ) );
  }
  catch ( nlohmann::json::exception const& e )
  {
    throw parse_error( path + ": " + e.what(), 1, 1 );
  }
}

} // namespace pwrgraph
