# -*- coding: utf-8 -*-
from .cosreg import combine_cosreg, cosreg_gradient, cosreg_loss
