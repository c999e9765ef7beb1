#include "vw/train.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "vw/pooldb.hpp"
#include "vw/rng.hpp"

namespace vw::train {

Ablate parse_ablate(const std::string& name) {
  if (name == "none") return Ablate::none;
  if (name == "rblw") return Ablate::rblw;
  if (name == "svdpi") return Ablate::svdpi;
  if (name == "whiten") return Ablate::whiten;
  throw std::invalid_argument("unknown ablation '" + name + "' (none | rblw | svdpi | whiten)");
}

const char* ablate_name(Ablate a) {
  switch (a) {
    case Ablate::none: return "none";
    case Ablate::rblw: return "rblw";
    case Ablate::svdpi: return "svdpi";
    case Ablate::whiten: return "whiten";
  }
  return "?";
}

namespace {

struct Triplet {
  int a = 0, p = 0, n = 0;  // indices into train_set.scans
};

// Scans grouped by place; only places with >= 2 scans can anchor a triplet.
struct Groups {
  std::vector<std::vector<int>> by_place;
  std::vector<int> anchorable;  // indices into by_place
};

Groups group_scans(const io::ScanSet& set) {
  std::unordered_map<std::uint64_t, std::size_t> slot;
  Groups g;
  for (int i = 0; i < int(set.scans.size()); ++i) {
    std::uint64_t place = set.scans[std::size_t(i)].place;
    auto it = slot.find(place);
    if (it == slot.end()) {
      it = slot.emplace(place, g.by_place.size()).first;
      g.by_place.emplace_back();
    }
    g.by_place[it->second].push_back(i);
  }
  for (int p = 0; p < int(g.by_place.size()); ++p)
    if (g.by_place[std::size_t(p)].size() >= 2) g.anchorable.push_back(p);
  if (g.by_place.size() < 2)
    throw std::invalid_argument("train_toy: need scans from at least 2 places");
  if (g.anchorable.empty())
    throw std::invalid_argument("train_toy: no place has 2 scans to form anchor/positive pairs");
  return g;
}

Triplet draw_triplet(const Groups& g, Rng& rng) {
  Triplet t;
  int gp = g.anchorable[std::size_t(rng.below(g.anchorable.size()))];
  const std::vector<int>& pos = g.by_place[std::size_t(gp)];
  std::uint64_t ai = rng.below(pos.size());
  std::uint64_t pi = rng.below(pos.size() - 1);
  if (pi >= ai) ++pi;
  t.a = pos[std::size_t(ai)];
  t.p = pos[std::size_t(pi)];
  int gn = gp;
  while (gn == gp) gn = int(rng.below(g.by_place.size()));
  const std::vector<int>& neg = g.by_place[std::size_t(gn)];
  t.n = neg[std::size_t(rng.below(neg.size()))];
  return t;
}

double validation_r1(const pipe::Model& model, const io::ScanSet& val_set,
                     const io::ScanSet& train_set, const pipe::DescriptorOptions& dopt) {
  io::DescriptorDb qdb = pipe::descriptor_db(model, val_set, dopt);
  io::DescriptorDb ddb = pipe::descriptor_db(model, train_set, dopt);
  metrics::RetrievalRun run =
      metrics::build_run(pipe::to_item_set(qdb), pipe::to_item_set(ddb), 3.0, false);
  return metrics::recall_at(run, 1).value;
}

}  // namespace

TrainResult train_toy(pipe::Model& model, const io::ScanSet& train_set,
                      const io::ScanSet& val_set, const TrainOptions& opt) {
  if (opt.batch < 1) throw std::invalid_argument("train_toy: batch must be >= 1");
  if (opt.epochs < 1 && opt.max_steps < 1)
    throw std::invalid_argument("train_toy: nothing to run (epochs and max_steps both < 1)");
  if (!(opt.lr > 0.0)) throw std::invalid_argument("train_toy: lr must be positive");

  Groups groups = group_scans(train_set);

  pipe::DescriptorOptions dopt;
  dopt.whiten = opt.ablate != Ablate::whiten;
  dopt.ablate_rblw = opt.ablate == Ablate::rblw;

  whiten::EigBackward mode =
      opt.ablate == Ablate::svdpi ? whiten::EigBackward::analytic : whiten::EigBackward::series;

  const int steps_per_epoch = std::max(1, int(train_set.scans.size()) / opt.batch);
  const int planned_epochs = opt.max_steps > 0
                                 ? (opt.max_steps + steps_per_epoch - 1) / steps_per_epoch
                                 : opt.epochs;

  TrainResult res;
  int step = 0;
  for (int epoch = 0; epoch < planned_epochs; ++epoch) {
    double loss_sum = 0.0;
    int loss_count = 0;
    for (int bs = 0; bs < steps_per_epoch; ++bs, ++step) {
      if (opt.max_steps > 0 && step >= opt.max_steps) break;
      std::uint64_t batch_seed = Rng::mix(opt.seed ^ Rng::mix(0x5453ull + std::uint64_t(step)));
      Rng brng(batch_seed);

      std::vector<Triplet> batch(std::size_t(opt.batch));
      std::vector<const Mat*> scans;
      scans.reserve(3 * std::size_t(opt.batch));
      for (Triplet& t : batch) {
        t = draw_triplet(groups, brng);
        scans.push_back(&train_set.scans[std::size_t(t.a)].data);
        scans.push_back(&train_set.scans[std::size_t(t.p)].data);
        scans.push_back(&train_set.scans[std::size_t(t.n)].data);
      }

      ad::Tape tape;
      pipe::TapeModel tm = pipe::TapeModel::attach(tape, model);
      std::vector<ad::Value> desc = tm.descriptors(scans, true, true, dopt, mode);

      ad::Value total = ad::Value::constant_scalar(0.0);
      for (int b = 0; b < opt.batch; ++b) {
        ad::Value d_ap = pipe::sq_distance(desc[std::size_t(3 * b)], desc[std::size_t(3 * b + 1)]);
        ad::Value d_an = pipe::sq_distance(desc[std::size_t(3 * b)], desc[std::size_t(3 * b + 2)]);
        ad::Value viol =
            ad::relu(ad::add(ad::sub(d_ap, d_an), ad::Value::constant_scalar(opt.margin)));
        total = ad::add(total, viol);
      }
      ad::Value loss = ad::smul(total, 1.0 / double(opt.batch));

      double loss_val = loss.scalar();
      StepRecord rec;
      rec.step = step;
      rec.loss = loss_val;
      rec.batch_seed = batch_seed;

      if (!std::isfinite(loss_val)) {
        rec.grad_norm = std::numeric_limits<double>::quiet_NaN();
        res.steps.push_back(rec);
        res.diverged = true;
        res.diverged_step = step;
        res.diverged_batch_seed = batch_seed;
        return res;
      }

      tape.backward(loss);
      std::vector<pipe::ParamRef> params = tm.params();
      double sq = 0.0;
      std::vector<Mat> grads;
      grads.reserve(params.size());
      for (const pipe::ParamRef& pr : params) {
        Mat g = tape.grad(pr.value);
        for (double e : g.a) sq += e * e;
        grads.push_back(std::move(g));
      }
      rec.grad_norm = std::sqrt(sq);
      res.steps.push_back(rec);

      if (!std::isfinite(rec.grad_norm)) {
        res.diverged = true;
        res.diverged_step = step;
        res.diverged_batch_seed = batch_seed;
        return res;
      }

      for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Mat& host = *params[pi].host;
        const Mat& g = grads[pi];
        for (std::size_t k = 0; k < host.a.size(); ++k) host.a[k] -= opt.lr * g.a[k];
      }

      loss_sum += loss_val;
      ++loss_count;
    }
    if (loss_count == 0) break;

    EpochRecord er;
    er.epoch = epoch;
    er.mean_loss = loss_sum / double(loss_count);
    if (opt.validate && !val_set.scans.empty())
      er.val_r1 = validation_r1(model, val_set, train_set, dopt);
    res.epochs.push_back(er);
    if (opt.max_steps > 0 && step >= opt.max_steps) break;
  }
  return res;
}

}  // namespace vw::train
