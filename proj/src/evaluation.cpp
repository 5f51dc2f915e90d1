#include "fatnet/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fatnet/errors.hpp"

namespace fatnet {

std::string to_string(SweepMode m) { return m == SweepMode::channel ? "channel" : "pixel"; }

SweepMode parse_sweep_mode(const std::string& s) {
  if (s == "channel") return SweepMode::channel;
  if (s == "pixel") return SweepMode::pixel;
  throw ConfigError("unknown sweep mode '" + s + "' (expected channel or pixel)");
}

std::size_t FaultSpec::target_index(const Shape4& site_shape) const {
  return target == SweepMode::channel ? channel : row * site_shape.w + col;
}

std::vector<SiteInfo> describe_sites(const Network& net) {
  std::vector<SiteInfo> out;
  const auto layers = net.fault_sites();
  for (std::size_t s = 0; s < layers.size(); ++s) {
    SiteInfo info{s, layers[s], net.output_shape(layers[s]), {}};
    // The stuck values are the codebook of the nearest quantized activation.
    for (std::size_t i = layers[s] + 1; i-- > 0;) {
      if (const auto* act = dynamic_cast<const QuantActLayer*>(&net.layer(i))) {
        if (act->codebook()) {
          const auto v = act->codebook()->values();
          info.values.assign(v.begin(), v.end());
        }
        break;
      }
    }
    out.push_back(std::move(info));
  }
  return out;
}

void validate_fault(const Network& net, const FaultSpec& f) {
  const auto sites = describe_sites(net);
  if (f.site >= sites.size()) {
    throw ConfigError("fault site " + std::to_string(f.site) + " out of range (network has " +
                      std::to_string(sites.size()) + " sites)");
  }
  const SiteInfo& s = sites[f.site];
  if (f.target == SweepMode::channel && f.channel >= s.shape.c) {
    throw ConfigError("fault channel " + std::to_string(f.channel) + " out of range for site shape " +
                      s.shape.str());
  }
  if (f.target == SweepMode::pixel && (f.row >= s.shape.h || f.col >= s.shape.w)) {
    throw ConfigError("fault pixel out of range for site shape " + s.shape.str());
  }
  if (std::find(s.values.begin(), s.values.end(), f.value) == s.values.end()) {
    throw ConfigError("stuck value " + std::to_string(f.value) + " is not in the site's codebook");
  }
}

void apply_fault(Tensor4& a, const FaultSpec& f) {
  const Shape4 s = a.shape();
  for (std::size_t n = 0; n < s.n; ++n) {
    if (f.target == SweepMode::channel) {
      float* plane = a.data() + a.index(n, f.channel, 0, 0);
      std::fill(plane, plane + s.plane(), f.value);
    } else {
      for (std::size_t c = 0; c < s.c; ++c) a.at(n, c, f.row, f.col) = f.value;
    }
  }
}

std::size_t argmax_class(const Tensor4& logits, std::size_t sample) {
  const std::size_t k = logits.shape().sample();
  const float* row = logits.data() + sample * k;
  return static_cast<std::size_t>(std::max_element(row, row + k) - row);
}

namespace {

std::size_t count_batch(const Tensor4& logits, std::span<const std::uint8_t> labels) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += argmax_class(logits, i) == labels[i];
  return correct;
}

}  // namespace

AccuracyCount count_correct(const Network& net, const Dataset& data,
                            const std::optional<FaultSpec>& fault, std::size_t batch_size) {
  std::size_t layer = 0;
  if (fault) {
    validate_fault(net, *fault);
    layer = net.fault_sites()[fault->site];
  }
  AccuracyCount acc{0, data.size()};
  std::vector<std::size_t> idx;
  for (std::size_t begin = 0; begin < data.size(); begin += batch_size) {
    const std::size_t count = std::min(batch_size, data.size() - begin);
    idx.resize(count);
    std::iota(idx.begin(), idx.end(), begin);
    const Tensor4 x = data.gather_images(idx);
    Tensor4 logits;
    if (fault) {
      Tensor4 a = net.infer_range(x, 0, layer + 1);
      apply_fault(a, *fault);
      logits = net.infer_range(a, layer + 1, net.size());
    } else {
      logits = net.infer(x);
    }
    acc.correct += count_batch(logits, std::span(data.labels).subspan(begin, count));
  }
  return acc;
}

double accuracy(const Network& net, const Dataset& data, const std::optional<FaultSpec>& fault) {
  return count_correct(net, data, fault).percent();
}

double SweepReport::min_accuracy() const {
  double m = error_free;
  if (!entries.empty()) m = entries.front().accuracy;
  for (const auto& e : entries) m = std::min(m, e.accuracy);
  return m;
}

double SweepReport::max_accuracy() const {
  double m = error_free;
  if (!entries.empty()) m = entries.front().accuracy;
  for (const auto& e : entries) m = std::max(m, e.accuracy);
  return m;
}

double population_variance(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double sq = 0.0;
  for (double x : xs) sq += (x - mean) * (x - mean);
  return sq / static_cast<double>(xs.size());
}

std::size_t expected_configurations(const Network& net, SweepMode mode) {
  std::size_t total = 0;
  for (const SiteInfo& s : describe_sites(net)) {
    const std::size_t targets = mode == SweepMode::channel ? s.shape.c : s.shape.plane();
    total += targets * s.values.size();
  }
  return total;
}

void finalize_report(SweepReport& r) {
  r.extremes.clear();
  std::vector<double> all;
  all.reserve(r.entries.size());
  for (const SweepEntry& e : r.entries) {
    all.push_back(e.accuracy);
    auto it = std::find_if(r.extremes.begin(), r.extremes.end(), [&](const LayerExtremes& x) {
      return x.site == e.fault.site && x.value == e.fault.value;
    });
    if (it == r.extremes.end()) {
      r.extremes.push_back({e.fault.site, e.fault.value, 1, e.accuracy, e.accuracy});
    } else {
      ++it->targets;
      it->min_accuracy = std::min(it->min_accuracy, e.accuracy);
      it->max_accuracy = std::max(it->max_accuracy, e.accuracy);
    }
  }
  std::stable_sort(r.extremes.begin(), r.extremes.end(), [](const LayerExtremes& a, const LayerExtremes& b) {
    return a.site != b.site ? a.site < b.site : a.value < b.value;
  });
  r.variance = population_variance(all);
}

SweepReport sweep(const Network& net, const Dataset& data, SweepMode mode, const SweepOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  SweepReport report;
  report.mode = mode;
  report.network_id = net.id();
  report.dataset = opts.dataset_name;
  report.eval_samples = data.size();
  report.sites = describe_sites(net);
  const auto site_layers = net.fault_sites();

  std::size_t max_values = 0;
  for (const SiteInfo& s : report.sites) max_values = std::max(max_values, s.values.size());
  for (std::size_t k = 0; k < max_values; ++k) {
    for (const SiteInfo& s : report.sites) {
      if (k >= s.values.size()) continue;
      const std::size_t targets = mode == SweepMode::channel ? s.shape.c : s.shape.plane();
      for (std::size_t t = 0; t < targets; ++t) {
        FaultSpec f{s.site, mode, 0, 0, 0, s.values[k]};
        if (mode == SweepMode::channel) {
          f.channel = t;
        } else {
          f.row = t / s.shape.w;
          f.col = t % s.shape.w;
        }
        report.entries.push_back({f, 0, 0.0});
      }
    }
  }

  int workers = static_cast<int>(opts.workers);
#ifdef _OPENMP
  if (workers <= 0) workers = omp_get_max_threads();
#else
  workers = 1;
#endif
  report.workers = static_cast<std::size_t>(workers);

  const std::size_t batch = std::max<std::size_t>(opts.batch_size, 1);
  std::vector<std::size_t> idx;
  const auto n_entries = static_cast<std::ptrdiff_t>(report.entries.size());
  for (std::size_t begin = 0; begin < data.size(); begin += batch) {
    const std::size_t count = std::min(batch, data.size() - begin);
    idx.resize(count);
    std::iota(idx.begin(), idx.end(), begin);
    const auto labels = std::span(data.labels).subspan(begin, count);
    const Tensor4 x = data.gather_images(idx);

    // Activations at every site, computed once per batch.
    std::vector<Tensor4> prefix(site_layers.size());
    std::size_t from = 0;
    const Tensor4* cur = &x;
    for (std::size_t s = 0; s < site_layers.size(); ++s) {
      prefix[s] = net.infer_range(*cur, from, site_layers[s] + 1);
      cur = &prefix[s];
      from = site_layers[s] + 1;
    }
    report.error_free_correct += count_batch(net.infer_range(*cur, from, net.size()), labels);

#pragma omp parallel for schedule(dynamic) num_threads(workers)
    for (std::ptrdiff_t i = 0; i < n_entries; ++i) {
      SweepEntry& e = report.entries[static_cast<std::size_t>(i)];
      Tensor4 a = prefix[e.fault.site];
      apply_fault(a, e.fault);
      const Tensor4 logits = net.infer_range(a, site_layers[e.fault.site] + 1, net.size());
      e.correct += count_batch(logits, labels);
    }
  }

  const double total = static_cast<double>(data.size());
  for (SweepEntry& e : report.entries) {
    e.accuracy = total > 0 ? 100.0 * static_cast<double>(e.correct) / total : 0.0;
  }
  report.error_free = total > 0 ? 100.0 * static_cast<double>(report.error_free_correct) / total : 0.0;
  finalize_report(report);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

ReportSummary summarize(const SweepReport& report) {
  ReportSummary out;
  for (const SiteInfo& s : report.sites) {
    SummaryRow row;
    row.site = s.site;
    for (const LayerExtremes& x : report.extremes) {
      if (x.site != s.site) continue;
      row.targets = x.targets;
      row.values.push_back(x.value);
      row.min_accuracy.push_back(x.min_accuracy);
      row.max_accuracy.push_back(x.max_accuracy);
    }
    if (!row.values.empty()) out.rows.push_back(std::move(row));
  }
  out.scatter = {report.network_id, report.min_accuracy(), report.max_accuracy(), report.error_free};
  return out;
}

}  // namespace fatnet
