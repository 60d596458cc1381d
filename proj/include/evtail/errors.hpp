// errors.hpp: exception hierarchy shared by all modules.
//
// Two families matter to callers. input_error covers everything wrong with
// files, arguments, or data layout. stat_error covers statistically honest
// failures (a fit that cannot be trusted, a scan that found nothing). The
// command line tool maps them to exit codes 1 and 2 respectively.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace evtail {

class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Problems with inputs or arguments. Exit code 1 territory.
class input_error : public error {
 public:
  using error::error;
};

// Statistically meaningful failures. Exit code 2 territory.
class stat_error : public error {
 public:
  using error::error;
};

class file_not_found : public input_error {
 public:
  using input_error::input_error;
};

class parse_error : public input_error {
 public:
  parse_error(std::size_t row, const std::string& reason)
      : input_error("row " + std::to_string(row) + ": " + reason), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

class empty_trace : public input_error {
 public:
  using input_error::input_error;
};

class invalid_sample : public input_error {
 public:
  using input_error::input_error;
};

class out_of_range : public input_error {
 public:
  using input_error::input_error;
};

class invalid_parameter : public input_error {
 public:
  using input_error::input_error;
};

class missing_horizon : public input_error {
 public:
  using input_error::input_error;
};

class already_accepted : public input_error {
 public:
  using input_error::input_error;
};

class degenerate_trace : public stat_error {
 public:
  using stat_error::stat_error;
};

class out_of_support : public stat_error {
 public:
  using stat_error::stat_error;
};

class too_few_exceedances : public stat_error {
 public:
  using stat_error::stat_error;
};

class too_few_observations : public stat_error {
 public:
  using stat_error::stat_error;
};

class fit_diverged : public stat_error {
 public:
  using stat_error::stat_error;
};

class singular_information : public stat_error {
 public:
  using stat_error::stat_error;
};

class below_threshold : public stat_error {
 public:
  using stat_error::stat_error;
};

class infinite_period : public stat_error {
 public:
  using stat_error::stat_error;
};

class all_runs_failed : public stat_error {
 public:
  using stat_error::stat_error;
};

class numeric_blowup : public stat_error {
 public:
  using stat_error::stat_error;
};

}  // namespace evtail
