"""Service for resolving parameter sets and their RNS bases"""

import logging
import math
from threading import Lock
from typing import Any, Dict, Optional, Tuple, Union

from core.application.kernels.rnsconv import make_basis
from core.domain.entities.modulus import Modulus
from core.domain.entities.param_set import ParamSet
from core.domain.entities.rns import RnsBasis
from core.domain.exceptions import UsageError
from core.infrastructure.config.constants import PARAM_SETS

logger = logging.getLogger(__name__)


class ParamSetService:
    """Loads named or custom parameter sets and derives their prime bases"""

    def __init__(self):
        self._bases: Dict[Tuple[int, int, int, int], Tuple[RnsBasis, RnsBasis]] = {}
        self._lock = Lock()

    def load_param_set(self, spec: Union[str, Dict[str, Any]],
                       degree: Optional[int] = None,
                       logq: Optional[int] = None,
                       limbs: Optional[int] = None,
                       limbs_out: Optional[int] = None) -> ParamSet:
        """Resolve a set name (A-D) or a custom dict, applying CLI overrides"""
        if isinstance(spec, dict):
            data = dict(spec)
        else:
            name = str(spec).strip()
            if name.upper() in PARAM_SETS:
                N, log2q, L, dnum, batch = PARAM_SETS[name.upper()]
                data = {
                    'name': name.upper(), 'N': N, 'log2q': log2q, 'L': L,
                    'L_aux': math.ceil(L / dnum), 'dnum': dnum, 'batch': batch,
                }
            elif name.lower() == 'custom':
                if degree is None or limbs is None:
                    raise UsageError("A custom parameter set needs --degree and --limbs")
                data = {'name': 'custom', 'N': degree, 'L': limbs}
            else:
                raise UsageError(f"Unknown parameter set {name!r}; choose A, B, C, D or custom")

        overrides = {'N': degree, 'log2q': logq, 'L': limbs, 'L_aux': limbs_out}
        for key, value in overrides.items():
            if value is not None:
                data[key] = value
        if limbs is not None and limbs_out is None and data.get('name') == 'custom':
            data['L_aux'] = limbs

        param_set = ParamSet.from_dict(data)
        logger.info(
            f"Parameter set {param_set.name}: N={param_set.N} log2q={param_set.log2q} "
            f"L={param_set.L} L'={param_set.L_aux} dnum={param_set.dnum}"
        )
        return param_set

    def primary_modulus(self, param_set: ParamSet) -> Modulus:
        """First NTT-friendly prime of the set's width"""
        return self.bases(param_set)[0].moduli[0]

    def bases(self, param_set: ParamSet) -> Tuple[RnsBasis, RnsBasis]:
        """(source basis of L primes, disjoint target basis of L' primes)"""
        key = (param_set.N, param_set.log2q, param_set.L, param_set.L_aux)
        with self._lock:
            cached = self._bases.get(key)
        if cached is not None:
            return cached

        source = make_basis(param_set.log2q, param_set.N, param_set.L)
        target = make_basis(param_set.log2q, param_set.N, param_set.L_aux,
                            exclude=source.q_values)
        with self._lock:
            self._bases[key] = (source, target)
        logger.debug(f"Generated bases for {key}: {source.q_values} -> {target.q_values}")
        return source, target

