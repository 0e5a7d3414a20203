// Copyright 2026 The effv2 Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "effv2/train/metrics.hpp"

#include <charconv>
#include <sstream>

#include "effv2/common/error.hpp"
#include "effv2/common/json_util.hpp"

namespace effv2::train {
namespace {

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

std::optional<double> last_of(const std::vector<MetricRow>& rows, std::optional<double> MetricRow::*field) {
  for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
    if ((*it).*field) return (*it).*field;
  }
  return std::nullopt;
}

double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw ValidationError(where + ": bad number '" + s + "'");
  return v;
}

std::int64_t parse_int(const std::string& s, const std::string& where) {
  std::int64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw ValidationError(where + ": bad integer '" + s + "'");
  return v;
}

}  // namespace

std::optional<double> Metrics::final_minival_acc() const { return last_of(rows, &MetricRow::minival_acc); }
std::optional<double> Metrics::final_minival_acc_ema() const { return last_of(rows, &MetricRow::minival_acc_ema); }
std::optional<double> Metrics::final_eval_acc() const { return last_of(rows, &MetricRow::eval_acc); }

std::string Metrics::to_csv(bool include_header) const {
  std::ostringstream out;
  if (include_header) out << kMetricsHeader << '\n';
  for (const auto& r : rows) {
    out << r.step << ',' << r.epoch << ',' << r.stage << ',' << r.image_size << ',' << fmt(r.dropout) << ','
        << fmt(r.randaug) << ',' << fmt(r.mixup) << ',' << fmt(r.lr) << ',' << fmt(r.train_loss) << ','
        << fmt(r.minival_acc) << ',' << fmt(r.minival_acc_ema) << ',' << fmt(r.eval_acc) << ','
        << fmt(r.step_time_s) << ',' << fmt(r.cumulative_time_s) << '\n';
  }
  return out.str();
}

void Metrics::write_csv(const std::filesystem::path& path) const { write_text_file_atomic(path, to_csv()); }

Metrics Metrics::read_csv(const std::filesystem::path& path) { return parse_csv(read_text_file(path), path.string()); }

Metrics Metrics::parse_csv(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw ValidationError(source + ":1: expected metrics header '" + std::string(kMetricsHeader) + "'");
  }
  Metrics m;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    const std::string where = source + ":" + std::to_string(lineno);
    if (cells.size() != 14) throw ValidationError(where + ": expected 14 columns, found " + std::to_string(cells.size()));
    auto opt = [&](const std::string& s) -> std::optional<double> {
      if (s.empty()) return std::nullopt;
      return parse_double(s, where);
    };
    MetricRow r;
    r.step = parse_int(cells[0], where);
    r.epoch = parse_int(cells[1], where);
    r.stage = static_cast<int>(parse_int(cells[2], where));
    r.image_size = static_cast<int>(parse_int(cells[3], where));
    r.dropout = parse_double(cells[4], where);
    r.randaug = parse_double(cells[5], where);
    r.mixup = parse_double(cells[6], where);
    r.lr = parse_double(cells[7], where);
    r.train_loss = parse_double(cells[8], where);
    r.minival_acc = opt(cells[9]);
    r.minival_acc_ema = opt(cells[10]);
    r.eval_acc = opt(cells[11]);
    r.step_time_s = parse_double(cells[12], where);
    r.cumulative_time_s = parse_double(cells[13], where);
    m.rows.push_back(r);
  }
  return m;
}

bool same_modulo_wall_clock(const MetricRow& a, const MetricRow& b) {
  return a.step == b.step && a.epoch == b.epoch && a.stage == b.stage && a.image_size == b.image_size &&
         a.dropout == b.dropout && a.randaug == b.randaug && a.mixup == b.mixup && a.lr == b.lr &&
         a.train_loss == b.train_loss && a.minival_acc == b.minival_acc && a.minival_acc_ema == b.minival_acc_ema &&
         a.eval_acc == b.eval_acc;
}

bool same_modulo_wall_clock(const Metrics& a, const Metrics& b) {
  if (a.rows.size() != b.rows.size() || a.early_stopped != b.early_stopped) return false;
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    if (!same_modulo_wall_clock(a.rows[i], b.rows[i])) return false;
  }
  return true;
}

}  // namespace effv2::train
