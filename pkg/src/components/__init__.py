# Components module

