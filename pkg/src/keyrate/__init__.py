# Key rate module