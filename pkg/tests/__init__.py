# Tests package for the PWM commutation toolkit
