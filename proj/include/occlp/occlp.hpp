#pragma once

#include "occlp/basis.hpp"
#include "occlp/config.hpp"
#include "occlp/errors.hpp"
#include "occlp/io.hpp"
#include "occlp/model.hpp"
#include "occlp/pipeline.hpp"
#include "occlp/silp.hpp"
#include "occlp/simplex.hpp"
#include "occlp/synthesis.hpp"
#include "occlp/verify.hpp"
