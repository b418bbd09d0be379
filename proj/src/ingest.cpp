// SPDX-License-Identifier: Apache-2.0

#include "mixlaw/ingest.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "mixlaw/errors.hpp"

namespace mixlaw {

namespace {

using nlohmann::json;

constexpr const char* kColumns[6] = {"domain",       "model_size_b", "ratio_domain",
                                     "step",         "loss_general", "loss_domain"};

struct Record {
  long line = 0;
  std::string domain;
  double model_size_b = 0;
  double ratio_domain = 0;
  std::int64_t step = 0;
  double loss_general = 0;
  double loss_domain = 0;
};

void check_record(const Record& rec) {
  if (!(std::isfinite(rec.model_size_b) && rec.model_size_b > 0.0))
    throw SchemaError(rec.line, "model_size_b must be > 0");
  if (!(std::isfinite(rec.ratio_domain) && rec.ratio_domain >= 0.0 && rec.ratio_domain <= 1.0))
    throw SchemaError(rec.line, "ratio_domain must be in [0, 1]");
  if (rec.step < 0) throw SchemaError(rec.line, "step must be >= 0");
  if (!(std::isfinite(rec.loss_general) && rec.loss_general > 0.0))
    throw SchemaError(rec.line, "loss_general must be > 0");
  if (!(std::isfinite(rec.loss_domain) && rec.loss_domain > 0.0))
    throw SchemaError(rec.line, "loss_domain must be > 0");
}

std::vector<Record> read_jsonl(std::istream& input) {
  std::vector<Record> records;
  std::string line;
  long line_no = 0;
  while (std::getline(input, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(line_no, "record is not a JSON object");
    for (const char* name : kColumns)
      if (!obj.contains(name))
        throw SchemaError(line_no, std::string("missing required field '") + name + "'");
    Record rec;
    rec.line = line_no;
    try {
      rec.domain = obj["domain"].get<std::string>();
      rec.model_size_b = obj["model_size_b"].get<double>();
      rec.ratio_domain = obj["ratio_domain"].get<double>();
      if (!obj["step"].is_number_integer() && !obj["step"].is_number_unsigned()) {
        const double s = obj["step"].get<double>();
        if (s != std::floor(s)) throw SchemaError(line_no, "step must be an integer");
        rec.step = static_cast<std::int64_t>(s);
      } else {
        rec.step = obj["step"].get<std::int64_t>();
      }
      rec.loss_general = obj["loss_general"].get<double>();
      rec.loss_domain = obj["loss_domain"].get<double>();
    } catch (const json::exception& e) {
      throw SchemaError(line_no, std::string("field has wrong type: ") + e.what());
    }
    check_record(rec);
    records.push_back(std::move(rec));
  }
  return records;
}

// RFC-style CSV: quoted fields may contain commas, quotes ("" escape) and
// newlines. Returns fields plus the line each record starts on.
struct CsvRecord {
  long line = 0;
  std::vector<std::string> fields;
};

std::vector<CsvRecord> read_csv_records(std::istream& input) {
  std::vector<CsvRecord> records;
  CsvRecord current;
  std::string field;
  long line_no = 1;
  current.line = 1;
  bool in_quotes = false;
  bool any_char = false;
  char c;
  auto end_field = [&] {
    current.fields.push_back(field);
    field.clear();
  };
  auto end_record = [&] {
    if (any_char || !current.fields.empty()) {
      end_field();
      records.push_back(std::move(current));
    }
    current = CsvRecord{};
    current.line = line_no;
    any_char = false;
  };
  while (input.get(c)) {
    if (in_quotes) {
      if (c == '"') {
        if (input.peek() == '"') {
          input.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line_no;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        any_char = true;
        break;
      case ',':
        end_field();
        any_char = true;
        break;
      case '\r':
        break;
      case '\n':
        ++line_no;
        end_record();
        break;
      default:
        field.push_back(c);
        any_char = true;
        break;
    }
  }
  if (in_quotes) throw ParseError(current.line, "unterminated quoted field");
  end_record();
  return records;
}

double parse_double(const std::string& text, long line, const char* name) {
  if (text.empty()) throw SchemaError(line, std::string("empty value for '") + name + "'");
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size())
    throw ParseError(line, std::string("not a number in '") + name + "': " + text);
  return value;
}

std::int64_t parse_step(const std::string& text, long line) {
  if (text.empty()) throw SchemaError(line, "empty value for 'step'");
  char* end = nullptr;
  const long long value = std::strtoll(text.c_str(), &end, 10);
  if (end != text.c_str() + text.size())
    throw ParseError(line, "not an integer in 'step': " + text);
  return value;
}

std::vector<Record> read_csv(std::istream& input) {
  auto rows = read_csv_records(input);
  if (rows.empty()) return {};
  // Header row is mandatory; columns may appear in any order.
  int index[6];
  const CsvRecord& header = rows.front();
  for (int i = 0; i < 6; ++i) {
    auto it = std::find(header.fields.begin(), header.fields.end(), kColumns[i]);
    if (it == header.fields.end())
      throw SchemaError(header.line, std::string("missing column '") + kColumns[i] + "'");
    index[i] = static_cast<int>(it - header.fields.begin());
  }
  std::vector<Record> records;
  for (std::size_t row = 1; row < rows.size(); ++row) {
    const CsvRecord& csv = rows[row];
    if (csv.fields.size() != header.fields.size())
      throw ParseError(csv.line, "wrong number of fields");
    Record rec;
    rec.line = csv.line;
    rec.domain = csv.fields[index[0]];
    rec.model_size_b = parse_double(csv.fields[index[1]], csv.line, "model_size_b");
    rec.ratio_domain = parse_double(csv.fields[index[2]], csv.line, "ratio_domain");
    rec.step = parse_step(csv.fields[index[3]], csv.line);
    rec.loss_general = parse_double(csv.fields[index[4]], csv.line, "loss_general");
    rec.loss_domain = parse_double(csv.fields[index[5]], csv.line, "loss_domain");
    check_record(rec);
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<LossCurve> group_records(std::vector<Record> records) {
  using Key = std::tuple<std::string, double, double>;
  std::map<Key, std::map<std::int64_t, Record>> groups;
  for (Record& rec : records) {
    Key key{rec.domain, rec.model_size_b, rec.ratio_domain};
    const long line = rec.line;
    const std::int64_t step = rec.step;
    auto [it, inserted] = groups[key].emplace(step, std::move(rec));
    if (!inserted)
      throw ConflictError(line, "duplicate step " + std::to_string(step) + " for curve (" +
                                    std::get<0>(key) + ", n=" + std::to_string(std::get<1>(key)) +
                                    ", r=" + std::to_string(std::get<2>(key)) + ")");
  }
  std::vector<LossCurve> curves;
  curves.reserve(groups.size());
  for (auto& [key, samples] : groups) {
    LossCurve curve;
    curve.domain_name = std::get<0>(key);
    curve.n = std::get<1>(key);
    curve.r_domain = std::get<2>(key);
    curve.samples.reserve(samples.size());
    for (auto& [step, rec] : samples)
      curve.samples.push_back(CurveSample{step, rec.loss_general, rec.loss_domain});
    validate(curve);
    curves.push_back(std::move(curve));
  }
  return curves;
}

std::string fmt17(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string csv_quote(const std::string& text) {
  if (text.find_first_of(",\"\n\r") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

}  // namespace

void validate(const SynthDesign& design) {
  if (design.model_sizes.empty() || design.domain_ratios.empty() || design.eval_steps.empty())
    throw std::invalid_argument("SynthDesign: sizes, ratios and steps must be non-empty");
  for (double n : design.model_sizes)
    if (!(n > 0.0)) throw std::invalid_argument("SynthDesign: model sizes must be > 0");
  for (double r : design.domain_ratios)
    if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("SynthDesign: ratios must be in [0, 1]");
  std::int64_t prev = -1;
  for (std::int64_t s : design.eval_steps) {
    if (s <= prev) throw std::invalid_argument("SynthDesign: eval_steps must be strictly increasing");
    prev = s;
  }
  if (!(design.noise_rel_std >= 0.0))
    throw std::invalid_argument("SynthDesign: noise_rel_std must be >= 0");
  if (design.noise_rel_std * 4.0 >= 1.0)
    throw std::invalid_argument("SynthDesign: noise_rel_std too large to keep losses positive");
}

std::vector<LossCurve> parse_run_log(std::istream& input, RunLogFormat format) {
  std::vector<Record> records =
      format == RunLogFormat::JsonLines ? read_jsonl(input) : read_csv(input);
  return group_records(std::move(records));
}

void serialize_run_log(std::ostream& output, std::span<const LossCurve> curves,
                       RunLogFormat format) {
  std::vector<const LossCurve*> order;
  order.reserve(curves.size());
  for (const LossCurve& c : curves) order.push_back(&c);
  std::sort(order.begin(), order.end(), [](const LossCurve* a, const LossCurve* b) {
    return std::tie(a->domain_name, a->n, a->r_domain) <
           std::tie(b->domain_name, b->n, b->r_domain);
  });
  if (format == RunLogFormat::Csv) {
    output << "domain,model_size_b,ratio_domain,step,loss_general,loss_domain\n";
    for (const LossCurve* c : order)
      for (const CurveSample& s : c->samples)
        output << csv_quote(c->domain_name) << ',' << fmt17(c->n) << ',' << fmt17(c->r_domain)
               << ',' << s.step << ',' << fmt17(s.loss_general) << ',' << fmt17(s.loss_domain)
               << '\n';
    return;
  }
  for (const LossCurve* c : order) {
    for (const CurveSample& s : c->samples) {
      json obj;
      obj["domain"] = c->domain_name;
      obj["model_size_b"] = c->n;
      obj["ratio_domain"] = c->r_domain;
      obj["step"] = s.step;
      obj["loss_general"] = s.loss_general;
      obj["loss_domain"] = s.loss_domain;
      output << obj.dump() << '\n';
    }
  }
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t double_bits(double value) {
  std::uint64_t bits;
  std::memcpy(&bits, &value, sizeof(bits));
  return bits;
}

double to_unit(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

}  // namespace

namespace detail {

double noise_draw(std::uint64_t seed, CorpusSide side, double n, double r_domain,
                  std::int64_t step) {
  std::uint64_t key = splitmix64(seed ^ 0xA0761D6478BD642FULL);
  key = splitmix64(key ^ (side == CorpusSide::Domain ? 0x8EBC6AF09C88C6E3ULL : 0x589965CC75374CC3ULL));
  key = splitmix64(key ^ double_bits(n));
  key = splitmix64(key ^ double_bits(r_domain));
  key = splitmix64(key ^ static_cast<std::uint64_t>(step));
  for (std::uint64_t attempt = 0;; ++attempt) {
    const std::uint64_t a = splitmix64(key ^ (0xD1B54A32D192ED03ULL * (2 * attempt + 1)));
    const std::uint64_t b = splitmix64(key ^ (0xD1B54A32D192ED03ULL * (2 * attempt + 2)));
    const double u1 = 1.0 - to_unit(a);  // (0, 1]
    const double u2 = to_unit(b);
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    if (std::abs(z) <= 4.0) return z;
  }
}

}  // namespace detail

std::vector<LossCurve> synthesize_curves(const LawParams& gen_general, const LawParams& gen_domain,
                                         const SynthDesign& design, const TrainConfig& cfg,
                                         const std::string& domain_name) {
  validate(design);
  if (!std::holds_alternative<DcptParams>(gen_general) ||
      !std::holds_alternative<DcptParams>(gen_domain))
    throw std::invalid_argument("synthesize_curves: generators must be D-CPT parameter records");
  std::vector<LossCurve> curves;
  for (double n : design.model_sizes) {
    for (double r_domain : design.domain_ratios) {
      LossCurve curve;
      curve.domain_name = domain_name;
      curve.n = n;
      curve.r_domain = r_domain;
      curve.samples.reserve(design.eval_steps.size());
      for (std::int64_t step : design.eval_steps) {
        const double d = tokens_from_steps(step, cfg);
        double loss_d, loss_g;
        try {
          loss_d = evaluate(gen_domain, n, d, r_domain);
          loss_g = evaluate(gen_general, n, d, 1.0 - r_domain);
        } catch (const std::invalid_argument& e) {
          throw std::domain_error(std::string("synthesize_curves: generator undefined at design "
                                              "point: ") + e.what());
        }
        if (design.noise_rel_std > 0.0) {
          loss_d *= 1.0 + design.noise_rel_std *
                              detail::noise_draw(design.seed, CorpusSide::Domain, n, r_domain, step);
          loss_g *= 1.0 + design.noise_rel_std *
                              detail::noise_draw(design.seed, CorpusSide::General, n, r_domain, step);
        }
        curve.samples.push_back(CurveSample{step, loss_g, loss_d});
      }
      curves.push_back(std::move(curve));
    }
  }
  return curves;
}

}  // namespace mixlaw
