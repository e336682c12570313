#pragma once

#include "ksauth/bigint.hpp"
#include "ksauth/errors.hpp"
#include "ksauth/harness.hpp"
#include "ksauth/hash.hpp"
#include "ksauth/identity.hpp"
#include "ksauth/messages.hpp"
#include "ksauth/params.hpp"
#include "ksauth/scenario.hpp"
#include "ksauth/scheme.hpp"
#include "ksauth/server.hpp"
#include "ksauth/smartcard.hpp"
