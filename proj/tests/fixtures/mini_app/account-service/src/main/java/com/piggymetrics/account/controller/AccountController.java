package com.piggymetrics.account.controller;

import org.springframework.web.bind.annotation.PathVariable;
import org.springframework.web.bind.annotation.RequestMapping;
import org.springframework.web.bind.annotation.RestController;

@RestController
public class AccountController {

    @RequestMapping(path = "/accounts/{name}")
    public String getAccountByName(@PathVariable String name) {
        return name;
    }
}
