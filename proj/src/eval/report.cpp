#include "gfss/eval/report.hpp"

#include <fmt/format.h>

#include <sstream>
#include <stdexcept>

namespace gfss::eval {

TableRow make_row(const std::string& encoder, const std::string& decoder, double base_training, std::size_t shots,
                  const MetricsReport& report) {
  return {encoder, decoder, base_training, shots, report.base_miou, report.novel_miou, report.mean};
}

std::string table_csv(const std::vector<TableRow>& rows) {
  std::string out = std::string(kTableHeader) + "\n";
  for (const auto& r : rows)
    out += fmt::format("{},{},{:.6f},{},{:.6f},{:.6f},{:.6f}\n", r.encoder, r.decoder, r.base_training, r.shots, r.base,
                       r.novel, r.mean);
  return out;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double number(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(fmt::format("line {}: '{}' is not a number", line, s));
  }
}

}  // namespace

std::vector<TableRow> parse_table_csv(const std::string& text) {
  std::stringstream ss(text);
  std::string line;
  if (!std::getline(ss, line)) throw std::invalid_argument("empty table");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTableHeader) throw std::invalid_argument("unexpected table header '" + line + "'");
  std::vector<TableRow> rows;
  std::size_t n = 1;
  while (std::getline(ss, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = split_fields(line);
    if (f.size() != 7) throw std::invalid_argument(fmt::format("line {}: expected 7 fields, got {}", n, f.size()));
    const double shots = number(f[3], n);
    if (shots < 1 || shots != static_cast<double>(static_cast<std::size_t>(shots)))
      throw std::invalid_argument(fmt::format("line {}: bad shots value", n));
    rows.push_back({f[0], f[1], number(f[2], n), static_cast<std::size_t>(shots), number(f[4], n), number(f[5], n),
                    number(f[6], n)});
  }
  return rows;
}

std::string table_text(const std::vector<TableRow>& rows) {
  std::string out = fmt::format("{:<16} {:<22} {:>8} {:>5} {:>8} {:>8} {:>8}\n", "encoder", "decoder", "base_trn",
                                "shots", "base", "novel", "mean");
  for (const auto& r : rows)
    out += fmt::format("{:<16} {:<22} {:>8.4f} {:>5} {:>8.4f} {:>8.4f} {:>8.4f}\n", r.encoder, r.decoder,
                       r.base_training, r.shots, r.base, r.novel, r.mean);
  return out;
}

std::string class_csv(const std::string& encoder, const std::string& decoder, std::size_t shots,
                      const MetricsReport& report, const fewshot::ClassSplit& split) {
  std::string out = "encoder,decoder,shots,class_id,group,iou\n";
  for (const auto& [id, v] : report.class_iou) {
    if (id == 0) continue;
    const char* group = split.is_novel(id) ? "novel" : split.is_base(id) ? "base" : nullptr;
    if (!group) continue;
    out += fmt::format("{},{},{},{},{},{:.6f}\n", encoder, decoder, shots, id, group, v);
  }
  return out;
}

std::string history_csv(const std::vector<fewshot::EpochRecord>& history) {
  std::string out = "epoch,loss,val_miou\n";
  for (const auto& r : history) out += fmt::format("{},{:.6f},{}\n", r.epoch, r.loss, r.val_miou);
  return out;
}

}  // namespace gfss::eval
