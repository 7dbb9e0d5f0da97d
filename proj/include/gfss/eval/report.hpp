#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gfss/eval/metrics.hpp"
#include "gfss/fewshot/base_train.hpp"

namespace gfss::eval {

/// One row of the comparison table.
struct TableRow {
  std::string encoder;
  std::string decoder;
  double base_training = 0.0;  // best validation mIoU of base training
  std::size_t shots = 1;
  double base = 0.0;
  double novel = 0.0;
  double mean = 0.0;
};

inline constexpr const char* kTableHeader = "encoder,decoder,base_training,shots,base,novel,mean";

TableRow make_row(const std::string& encoder, const std::string& decoder, double base_training, std::size_t shots,
                  const MetricsReport& report);

std::string table_csv(const std::vector<TableRow>& rows);
/// Parses table CSV text. Throws std::invalid_argument on a bad header or row.
std::vector<TableRow> parse_table_csv(const std::string& text);
/// Fixed-width text rendering, one line per row.
std::string table_text(const std::vector<TableRow>& rows);

/// encoder,decoder,shots,class_id,group,iou (group is base or novel).
std::string class_csv(const std::string& encoder, const std::string& decoder, std::size_t shots,
                      const MetricsReport& report, const fewshot::ClassSplit& split);

/// epoch,loss,val_miou (val_miou printed round-trip exact)
std::string history_csv(const std::vector<fewshot::EpochRecord>& history);

}  // namespace gfss::eval
