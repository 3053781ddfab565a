// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string_view>

namespace ksf {

/// SQL that creates every store table (idempotent). Identical to docs/schema.sql.
std::string_view schema_ddl();

}  // namespace ksf
