#pragma once

#include <stdexcept>
#include <string>

namespace judgekit {

// One code per contract failure the pipeline distinguishes. Codes map 1:1
// onto the machine-readable "error" field the CLI prints on stderr.
enum class ErrorCode {
  missing_rubric,
  missing_asset,
  missing_forcing_phrase,
  translation_invalid,
  backend_error,
  timeout,
  unterminated_think,
  no_json_found,
  missing_key,
  invalid_score_label,
  label_mismatch_domain,
  incomplete_triple,
  insufficient_pool,
  missing_distill_record,
  unmapped_language,
  out_of_range,
  judge_parse_error,
  usage_error,
  stage_error,
  io_error,
  config_error,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}
  ErrorCode code() const { return code_; }
  const char* code_name() const { return error_code_name(code_); }

 private:
  ErrorCode code_;
};

}  // namespace judgekit
