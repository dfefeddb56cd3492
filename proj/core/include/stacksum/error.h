#ifndef STACKSUM_ERROR_H_
#define STACKSUM_ERROR_H_

#include <stdexcept>
#include <string>

namespace stacksum {

// Raised for invalid inputs and data problems (bad documents, malformed
// files, shape mismatches). Programming errors use assertions instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace stacksum

#endif  // STACKSUM_ERROR_H_
