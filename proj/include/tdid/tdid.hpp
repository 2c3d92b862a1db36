#pragma once

#include "tdid/abstraction.hpp"
#include "tdid/construct.hpp"
#include "tdid/deploy.hpp"
#include "tdid/error.hpp"
#include "tdid/factor.hpp"
#include "tdid/format.hpp"
#include "tdid/metareason.hpp"
#include "tdid/model.hpp"
#include "tdid/report.hpp"
#include "tdid/solve.hpp"
