# -*- coding: utf-8 -*-
from .dwa import weights_dwa
from .famo import weights_famo
from .gradnorm import weights_gradnorm
from .imtl import combine_imtl
from .uncertainty import weights_uncertainty
