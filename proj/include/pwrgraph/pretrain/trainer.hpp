#pragma once

#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "../segment/dataset.hpp"
#include "../util/rng.hpp"
#include "../util/strings.hpp"
#include "checkpoint.hpp"
#include "model.hpp"

namespace pwrgraph
{

struct PretrainConfig
{
  std::size_t epochs{ 60 };
  std::size_t batch_size{ 16 };
  double lr{ 1e-4 };
  double tau{ 0.07 };
  double mask_ratio{ 0.15 };
  bool size_log2{ true };
  bool stop_grad_p{ false };
  std::size_t max_batches_per_epoch{ 0 }; ///< 0 = every sample once per epoch
  std::uint64_t seed{ 1 };

  nlohmann::json to_json() const
  {
    return { { "epochs", epochs },       { "batch_size", batch_size }, { "lr", lr },
             { "tau", tau },             { "mask_ratio", mask_ratio }, { "size_log2", size_log2 },
             { "stop_grad_p", stop_grad_p }, { "max_batches_per_epoch", max_batches_per_epoch }, { "seed", seed } };
  }
};

struct PretrainLogRow
{
  std::size_t epoch, batch;
  LossBreakdown loss;
};

inline std::string pretrain_log_csv( std::vector<PretrainLogRow> const& rows )
{
  std::ostringstream os;
  os << "epoch,batch,l_mt,l_mn,l_size,l_cl1,l_cl2,total\n";
  for ( auto const& r : rows )
    os << r.epoch << ',' << r.batch << ',' << format_double( r.loss.l_mt ) << ',' << format_double( r.loss.l_mn ) << ','
       << format_double( r.loss.l_size ) << ',' << format_double( r.loss.l_cl1 ) << ',' << format_double( r.loss.l_cl2 ) << ','
       << format_double( r.loss.total() ) << '\n';
  return os.str();
}

/*! \brief Batches of one epoch: shuffled training entries, no two items of a batch from the same (design, scope). */
inline std::vector<std::vector<DatasetManifest::Entry>> epoch_batches( DatasetManifest const& m, std::size_t epoch,
                                                                       PretrainConfig const& cfg )
{
  std::vector<DatasetManifest::Entry> pool;
  for ( auto const& e : m.samples )
    if ( m.designs[e.design].split == "train" )
      pool.push_back( e );
  rng_t rng( derive_seed( cfg.seed, 0x5eed0000ull + epoch ) );
  shuffle_in_place( pool, rng );
  std::vector<std::vector<DatasetManifest::Entry>> done, open;
  auto key = []( DatasetManifest::Entry const& e ) { return ( std::uint64_t( e.design ) << 32 ) | e.scope; };
  for ( auto const& e : pool )
  {
    bool placed = false;
    for ( auto& b : open )
    {
      bool clash = false;
      for ( auto const& x : b )
        clash |= key( x ) == key( e );
      if ( !clash )
      {
        b.push_back( e );
        placed = true;
        break;
      }
    }
    if ( !placed )
      open.push_back( { e } );
    for ( std::size_t i = 0; i < open.size(); ++i )
      if ( open[i].size() == cfg.batch_size )
      {
        done.push_back( std::move( open[i] ) );
        open.erase( open.begin() + static_cast<std::ptrdiff_t>( i ) );
        break;
      }
    if ( cfg.max_batches_per_epoch && done.size() == cfg.max_batches_per_epoch )
      return done;
  }
  for ( auto& b : open )
    if ( b.size() >= 2 && !( cfg.max_batches_per_epoch && done.size() == cfg.max_batches_per_epoch ) )
      done.push_back( std::move( b ) );
  return done;
}

inline PretrainItem make_item( DesignBundle const& b, DatasetManifest::Entry const& e, double mask_ratio, std::uint64_t mask_seed )
{
  PretrainItem it;
  it.g = b.sample( Stage::G, e.scope, e.cycle );
  it.gp = b.sample( Stage::G_PLUS, e.scope, e.cycle );
  it.p = b.sample( Stage::P, e.scope, e.cycle );
  it.masked = apply_masks( it.g, mask_ratio, mask_ratio, mask_seed );
  return it;
}

inline std::uint64_t mask_seed( std::uint64_t seed, std::size_t epoch, std::size_t batch, std::size_t slot )
{
  return derive_seed( derive_seed( seed, 0x3a5c0000ull + epoch ), ( std::uint64_t( batch ) << 16 ) | slot );
}

struct PretrainCallbacks
{
  std::function<void( PretrainLogRow const& )> on_batch;
  std::function<void( Checkpoint const&, LossBreakdown const& epoch_mean )> on_epoch;
};

/*! \brief Fresh checkpoint (epoch 0) for a configuration. */
inline Checkpoint initial_checkpoint( EncoderConfig const& enc, PretrainConfig const& cfg )
{
  Checkpoint ck;
  ck.model = init_model( enc );
  ck.encoder_opt = AdamState::for_params( ck.model.encoder.params, cfg.lr );
  ck.heads_opt = AdamState::for_params( ck.model.heads, cfg.lr );
  ck.seed = cfg.seed;
  ck.train_config = cfg.to_json();
  return ck;
}

/*! \brief Run epochs ck.epoch .. cfg.epochs-1 over the training split. Deterministic given (ck, cfg). */
inline Checkpoint pretrain( std::vector<DesignBundle> const& bundles, DatasetManifest const& m, PretrainConfig const& cfg,
                            Checkpoint ck, PretrainCallbacks const& cb = {} )
{
  if ( m.designs_in( "train" ).empty() )
    throw argument_error( "pretrain: manifest has no training designs" );
  LossOptions opt;
  opt.tau = cfg.tau;
  opt.size_log2 = cfg.size_log2;
  opt.stop_grad_p = cfg.stop_grad_p;
  for ( auto e = ck.epoch; e < cfg.epochs; ++e )
  {
    auto const batches = epoch_batches( m, e, cfg );
    if ( batches.empty() )
      throw argument_error( "pretrain: not enough distinct scopes to form a batch" );
    LossBreakdown sum;
    for ( std::size_t bi = 0; bi < batches.size(); ++bi )
    {
      std::vector<PretrainItem> items;
      for ( std::size_t s = 0; s < batches[bi].size(); ++s )
      {
        auto const& en = batches[bi][s];
        items.push_back( make_item( bundles.at( en.design ), en, cfg.mask_ratio, mask_seed( cfg.seed, e, bi, s ) ) );
      }
      ModelGrads g;
      auto const L = total_loss( ck.model, items, opt, &g );
      adam_step( ck.model.encoder.params, g.encoder, ck.encoder_opt );
      adam_step( ck.model.heads, g.heads, ck.heads_opt );
      sum += L;
      if ( cb.on_batch )
        cb.on_batch( { e, bi, L } );
    }
    sum /= static_cast<double>( batches.size() );
    ck.epoch = e + 1;
    if ( cb.on_epoch )
      cb.on_epoch( ck, sum );
  }
  return ck;
}

} // namespace pwrgraph
