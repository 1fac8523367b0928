// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ani/lang.hpp"
#include "ani/parser.hpp"
#include "ani/printer.hpp"
#include "ani/policy.hpp"
#include "ani/semantics.hpp"
#include "ani/moore.hpp"
#include "ani/domains.hpp"
#include "ani/checkers.hpp"
#include "ani/completeness.hpp"
#include "ani/derive.hpp"
#include "ani/fixtures.hpp"
#include "ani/report.hpp"
