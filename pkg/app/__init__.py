# PWM Commutation package
