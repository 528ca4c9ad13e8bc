# Pipeline module

