#include "balreg/train.hpp"

#include "balreg/serialize.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace balreg {

TrainConfig default_train_config(OracleKind oracle, int label_dim) {
  TrainConfig config;
  config.batch_size = 256;
  if (oracle == OracleKind::Linear && label_dim == 1) {
    config.optimizer = SgdSpec{1e-3, 0.9};
    config.epochs = 2000;
  } else {
    config.optimizer = AdamSpec{0.2, 0.9, 0.999, 1e-8};
    config.epochs = 10000;
  }
  return config;
}

namespace {

void validate(const SyntheticDataset& dataset, const TrainConfig& config,
              const PriorSet& priors) {
  if (dataset.size() < 1) throw std::invalid_argument("train: empty dataset");
  if (config.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (config.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (config.loss == LossKind::Bmc && (config.batch_size < 2 || dataset.size() < 2))
    throw std::invalid_argument("train: bmc needs batches of at least 2 labels");
  if (config.loss == LossKind::Gai && !priors.gmm)
    throw std::invalid_argument("train: gai loss needs a fitted gmm prior");
  if (config.loss == LossKind::Bni && !priors.binned)
    throw std::invalid_argument("train: bni loss needs a fitted binned prior");
  if (config.loss == LossKind::ReweightedMse && !priors.density)
    throw std::invalid_argument("train: reweighted mse needs a density callback");
  if (config.loss == LossKind::BalancedSoftmax)
    throw std::invalid_argument("train: balanced_softmax is a classification loss, "
                                "not a regression training loss");
  if (!(config.sigma.value > 0.0))
    throw std::invalid_argument("train: sigma must be > 0");
}

}  // namespace

TrainResult train(const SyntheticDataset& dataset, const TrainConfig& config,
                  const PriorSet& priors) {
  validate(dataset, config, priors);
  const int n = dataset.size();
  const int d = dataset.label_dim();
  const bool learn_sigma = config.sigma.mode == SigmaMode::Learnable;

  Rng init_rng = Rng(config.seed).derive(0x696e6974);     // "init"
  Rng shuffle_rng = Rng(config.seed).derive(0x73687566);  // "shuf"

  const NoiseScale noise = learn_sigma ? NoiseScale::learnable_init(config.sigma.value)
                                       : NoiseScale::fixed(config.sigma.value);
  ModelParams model =
      init_model(config.model_kind, dataset.input_dim(), d, config.hidden, noise, init_rng);

  Vec params = pack_params(model, learn_sigma);
  OptimizerState opt_state;

  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  std::vector<Mat> grad_w(model.weights.size());
  std::vector<Vec> grad_b(model.biases.size());

  TrainingTrace trace;
  trace.reserve(static_cast<size_t>(config.epochs));
  ForwardCache cache;
  BmcBatchEvaluator bmc_evaluator;
  std::vector<ForwardCache> batch_caches;
  Mat batch_preds;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    int epoch_samples = 0;

    for (int start = 0, batch_index = 0; start < n; start += config.batch_size, ++batch_index) {
      const int batch_n = std::min(config.batch_size, n - start);
      if (config.loss == LossKind::Bmc && batch_n < 2) continue;  // degenerate remainder

      for (size_t l = 0; l < model.weights.size(); ++l) {
        grad_w[l] = Mat::Zero(model.weights[l].rows(), model.weights[l].cols());
        grad_b[l] = Vec::Zero(model.biases[l].size());
      }
      double grad_log_sigma = 0.0;
      double batch_loss = 0.0;

      // per-batch loss context
      std::optional<GaiEvaluator> gai;
      if (config.loss == LossKind::Gai)
        gai.emplace(*priors.gmm, model.noise.sigma());
      BatchPrior batch_prior;
      if (config.loss == LossKind::Bmc) {
        batch_prior.labels.resize(batch_n, d);
        for (int i = 0; i < batch_n; ++i)
          batch_prior.labels.row(i) = dataset.labels.row(order[static_cast<size_t>(start + i)]);
      }
      Vec reweights;
      if (config.loss == LossKind::ReweightedMse) {
        reweights.resize(batch_n);
        for (int i = 0; i < batch_n; ++i) {
          const Vec y = dataset.labels.row(order[static_cast<size_t>(start + i)]).transpose();
          const double density = priors.density(y);
          reweights(i) = density > 0.0 ? std::min(1.0 / density, config.reweight_clip)
                                       : config.reweight_clip;
        }
        reweights *= batch_n / reweights.sum();  // mean-1 normalization
      }

      if (config.loss == LossKind::Bmc) {
        // one N x N evaluation for the whole batch
        batch_caches.resize(static_cast<size_t>(batch_n));
        batch_preds.resize(batch_n, d);
        for (int i = 0; i < batch_n; ++i) {
          const int row = order[static_cast<size_t>(start + i)];
          batch_preds.row(i) = forward_cached(model, dataset.inputs.row(row).transpose(),
                                              batch_caches[static_cast<size_t>(i)])
                                   .transpose();
        }
        const BmcBatchEval& evals =
            bmc_evaluator.evaluate(batch_preds, model.noise, batch_prior);
        for (int i = 0; i < batch_n; ++i) {
          if (!std::isfinite(evals.values(i)))
            throw TrainingError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                ", batch " + std::to_string(batch_index));
          batch_loss += evals.values(i);
          backward(model, batch_caches[static_cast<size_t>(i)],
                   evals.grad_preds.row(i).transpose() / batch_n, grad_w, grad_b);
          grad_log_sigma += evals.grad_log_sigmas(i) / batch_n;
        }
      } else {
        for (int i = 0; i < batch_n; ++i) {
          const int row = order[static_cast<size_t>(start + i)];
          const Vec x = dataset.inputs.row(row).transpose();
          const Vec target = dataset.labels.row(row).transpose();
          const Vec pred = forward_cached(model, x, cache);

          LossEval eval;
          switch (config.loss) {
            case LossKind::Mse: eval = mse_loss(target, pred); break;
            case LossKind::ReweightedMse: {
              eval = mse_loss(target, pred);
              eval.value *= reweights(i);
              eval.grad_pred *= reweights(i);
              break;
            }
            case LossKind::Gai: eval = (*gai)(target, pred, learn_sigma); break;
            case LossKind::Bni:
              eval = bni_loss(target, pred, model.noise, *priors.binned);
              break;
            case LossKind::Bmc:
            case LossKind::BalancedSoftmax: break;  // handled above / rejected
          }
          if (!std::isfinite(eval.value))
            throw TrainingError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                ", batch " + std::to_string(batch_index));
          batch_loss += eval.value;
          backward(model, cache, eval.grad_pred / batch_n, grad_w, grad_b);
          grad_log_sigma += eval.grad_log_sigma / batch_n;
        }
      }

      const Vec grads = pack_grads(model, grad_w, grad_b, grad_log_sigma, learn_sigma);
      optimizer_step(params, grads, opt_state, config.optimizer);
      unpack_params(params, model, learn_sigma);
      if (!model.all_finite())
        throw TrainingError("train: non-finite parameter at epoch " + std::to_string(epoch) +
                            ", batch " + std::to_string(batch_index));

      epoch_loss += batch_loss;
      epoch_samples += batch_n;
    }

    trace.push_back(TraceRow{epoch, epoch_loss / epoch_samples, model.noise.sigma()});
  }

  return TrainResult{std::move(model), std::move(trace)};
}

std::string trace_to_csv(const TrainingTrace& trace) {
  std::ostringstream out;
  out << "epoch,mean_loss,sigma\n";
  for (const TraceRow& row : trace)
    out << row.epoch << ',' << fmt_double(row.mean_loss) << ',' << fmt_double(row.sigma)
        << '\n';
  return out.str();
}

}  // namespace balreg
